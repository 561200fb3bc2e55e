"""Command-line interface.

Subcommands cover the whole pipeline: `generate` synthetic data, `train` a
policy, `evaluate` it on held-out data, run parameter `sweep`s, `execute` an
interactive session in the terminal, and `serve` the HTTP API. All numeric
configuration flows through one JSON config file (sections "policy",
"costs", "risk", "generator", "guidelines") with flag overrides; precedence
is flag > file > default. The environment variable SCREENWISE_CONFIG names a
fallback config file when --config is absent.

Exit codes: 0 success, 2 configuration or usage error, 3 infeasible policy.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Any, Sequence

from .errors import ConfigError, PolicyInfeasibleError, ScreenwiseError
from .model import CostConfig, default_costs, normalize_features, parse_birads
from .policy import (
    PolicyConfig,
    advance_session,
    build_policy,
    load_policy,
    save_policy,
    start_session,
)
from .risk import DEFAULT_RISK, RiskParameters
from .synth import (
    default_generator_config,
    default_schema,
    generate,
    load_csv,
    misspecified_generator_config,
    write_csv,
)

CONFIG_ENV_VAR = "SCREENWISE_CONFIG"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3


def _load_config_file(path: str | None) -> dict[str, Any]:
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR)
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return data


def _policy_config(args: argparse.Namespace, file_config: dict[str, Any]) -> PolicyConfig:
    section = dict(file_config.get("policy", {}))
    for flag in ("eta", "delta", "gamma", "beta", "seed"):
        value = getattr(args, flag, None)
        if value is not None:
            section[flag] = value
    if getattr(args, "strict", False):
        section["strict"] = True
    try:
        return PolicyConfig.from_dict(section)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad policy configuration: {exc}") from exc


def _costs(file_config: dict[str, Any], gamma: float) -> CostConfig:
    section = file_config.get("costs")
    if section is None:
        return default_costs(gamma)
    try:
        return CostConfig(costs=dict(section["tests"]), gamma=gamma)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad cost configuration: {exc}") from exc


def _risk(file_config: dict[str, Any]) -> RiskParameters:
    section = file_config.get("risk")
    if section is None:
        return DEFAULT_RISK
    try:
        return RiskParameters.from_dict(section)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad risk configuration: {exc}") from exc


def _generator(args: argparse.Namespace, file_config: dict[str, Any]):
    section = file_config.get("generator")
    if section is not None:
        from .synth import GeneratorConfig

        config = GeneratorConfig.from_dict(section)
    elif getattr(args, "profile", "default") == "misspecified":
        config = misspecified_generator_config()
    else:
        config = default_generator_config()
    return config.with_overrides(
        population=getattr(args, "size", None), seed=getattr(args, "seed", None)
    )


def _cmd_generate(args: argparse.Namespace) -> int:
    file_config = _load_config_file(args.config)
    config = _generator(args, file_config)
    ds = generate(config, risk=_risk(file_config))
    write_csv(ds, args.out)
    print(f"wrote {len(ds)} records to {args.out}")
    return EXIT_OK


def _cmd_train(args: argparse.Namespace) -> int:
    file_config = _load_config_file(args.config)
    config = _policy_config(args, file_config)
    ds, report = load_csv(args.data, default_schema())
    if report.rejected:
        for line, reason in report.rejected[:20]:
            print(f"rejected line {line}: {reason}", file=sys.stderr)
        print(f"{len(report.rejected)} rows rejected", file=sys.stderr)
    if len(ds) == 0:
        raise ConfigError(f"no usable records in {args.data}")
    policy = build_policy(
        ds, config, costs=_costs(file_config, config.gamma), risk=_risk(file_config)
    )
    save_policy(policy, args.out)
    print(
        f"trained policy with {policy.partition_count} partitions "
        f"from {policy.m} records -> {args.out}"
    )
    return EXIT_OK


def _cmd_evaluate(args: argparse.Namespace) -> int:
    from .evaluation import EvaluationReport, evaluate_policy, write_report

    policy = load_policy(args.policy)
    ds, _ = load_csv(args.data, default_schema())
    evaluation = evaluate_policy(policy, ds)
    report = EvaluationReport(
        policy_evaluation=evaluation.to_dict(),
        partition_count=policy.partition_count,
        provenance={"policy": args.policy, "data": args.data},
    )
    if args.out.endswith(".json"):
        with open(args.out, "w", encoding="utf-8") as handle:
            json.dump(report.to_dict(), handle, sort_keys=True, indent=2)
            handle.write("\n")
        print(f"wrote report to {args.out}")
    else:
        path = write_report(
            report, args.out, policy.config.to_dict(), (policy.config.seed,) * 2
        )
        print(f"wrote report to {path}")
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace) -> int:
    from .evaluation import EvaluationReport, sweep_beta, sweep_m, write_report

    file_config = _load_config_file(args.config)
    policy_config = _policy_config(args, file_config)
    generator_config = _generator(args, file_config)
    seeds = list(range(args.runs))
    if args.kind == "beta":
        sweep = sweep_beta(
            [0.0, 0.25, 0.5, 0.75, 1.0], generator_config, policy_config, seeds
        )
        sweeps = {"beta": sweep}
    else:
        sweep = sweep_m(
            [1000, 5000, 20000],
            [policy_config.eta],
            generator_config,
            policy_config,
            seeds,
        )
        sweeps = {"m": sweep}
    report = EvaluationReport(
        policy_evaluation={},
        partition_count=0,
        sweeps=sweeps,
        provenance={"kind": args.kind},
    )
    path = write_report(
        report, args.out, policy_config.to_dict(), (0, args.runs - 1)
    )
    print(f"wrote sweep to {path}")
    return EXIT_OK


def _prompt_features(schema) -> dict[str, float]:
    values: dict[str, float] = {}
    for spec in schema.features:
        while True:
            token = input(f"{spec.name} [{spec.minimum}..{spec.maximum}]: ").strip()
            try:
                values[spec.name] = float(token)
                break
            except ValueError:
                print(f"not a number: {token!r}", file=sys.stderr)
    return values


def _cmd_execute(args: argparse.Namespace) -> int:
    policy = load_policy(args.policy)
    schema = policy.schema
    if args.features:
        try:
            raw = json.loads(args.features)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad --features JSON: {exc}") from exc
    else:
        raw = _prompt_features(schema)
    x = normalize_features(raw, schema)
    session = start_session(x, policy, session_id="cli")
    print(f"partition: {session.partition_id}")
    while not session.is_final:
        test = session.pending_test
        lo, hi = session.diagnosis_interval
        print(
            f"recommended test: {test} (cost {policy.costs.cost_of(test):.2f})"
        )
        print(
            f"intermediate assessment: {session.diagnosis_label} "
            f"(error interval [{lo:.3f}, {hi:.3f}])"
        )
        token = input(f"BI-RADS result for {test}: ").strip()
        try:
            score = parse_birads(token)
        except ValueError:
            print(f"invalid BI-RADS token: {token!r}", file=sys.stderr)
            continue
        if score is None:
            print("score 0/empty means an incomplete study; enter a reportable score", file=sys.stderr)
            continue
        session = advance_session(session, test, score)
    verdict = "biopsy referral" if session.final_label == 1 else "regular followup"
    lo, hi = session.diagnosis_interval
    print(f"final recommendation: {verdict}")
    print(f"total screening cost: {session.cost:.2f}")
    print(f"error interval: [{lo:.3f}, {hi:.3f}]")
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    policy = load_policy(args.policy) if args.policy else None
    app = create_app(policy, console_dir=args.console)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="screenwise",
        description="Learn and execute personalized screening policies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset CSV")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--config", help="JSON config file (generator section)")
    p.add_argument("--seed", type=int, help="generator seed")
    p.add_argument("--size", type=int, help="number of records")
    p.add_argument(
        "--profile",
        choices=["default", "misspecified"],
        default="default",
        help="packaged generator profile when no config file is given",
    )
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("train", help="learn a policy from a CSV dataset")
    p.add_argument("--data", required=True, help="training CSV")
    p.add_argument("--out", required=True, help="output policy JSON path")
    p.add_argument("--config", help="JSON config file (policy/costs/risk sections)")
    p.add_argument("--eta", type=float, help="false-negative rate cap")
    p.add_argument("--delta", type=float, help="confidence parameter")
    p.add_argument("--gamma", type=float, help="misclassification cost weight")
    p.add_argument("--beta", type=float, help="distance blend weight")
    p.add_argument("--strict", action="store_true", help="enable strict mode")
    p.add_argument("--seed", type=int, help="build seed recorded in the policy")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a policy on a CSV dataset")
    p.add_argument("--policy", required=True, help="policy JSON path")
    p.add_argument("--data", required=True, help="evaluation CSV")
    p.add_argument("--out", required=True, help="report JSON path or directory")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("sweep", help="run a beta or training-size sweep")
    p.add_argument("--kind", choices=["beta", "m"], required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--runs", type=int, default=5, help="seeds per grid point")
    p.add_argument("--eta", type=float, help="false-negative rate cap")
    p.add_argument("--delta", type=float, help="confidence parameter")
    p.add_argument("--gamma", type=float, help="misclassification cost weight")
    p.add_argument("--beta", type=float, help="distance blend weight")
    p.add_argument("--strict", action="store_true", help="enable strict mode")
    p.add_argument("--seed", type=int, help="base seed")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("execute", help="run one interactive screening session")
    p.add_argument("--policy", required=True, help="policy JSON path")
    p.add_argument(
        "--features",
        help='patient features as JSON, e.g. \'{"age": 55, ...}\'; prompts if absent',
    )
    p.set_defaults(func=_cmd_execute)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--policy", help="policy JSON path")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--console", help="directory of built console assets to serve")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help; pass both through.
        return int(exc.code or 0)
    try:
        return args.func(args)
    except PolicyInfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, ScreenwiseError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
