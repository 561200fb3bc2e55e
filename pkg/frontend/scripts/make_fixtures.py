"""Record console test fixtures from the real service and CLI.

Builds a small deterministic policy, drives one scripted session through
the HTTP API (recording every exchange), captures the terminal client's
transcript for the same inputs, and freezes everything under
tests/fixtures/. Run from the repository root:

    python3 frontend/scripts/make_fixtures.py
"""

import builtins
import contextlib
import io
import json
import os
import re
import tempfile

from fastapi.testclient import TestClient

import screenwise as sw
from screenwise.cli import main
from screenwise.policy import PolicyConfig, build_policy, save_policy
from screenwise.service import create_app

FIXTURES = os.path.join(os.path.dirname(__file__), "..", "tests", "fixtures")

SCORES = {"MG": "4A", "US": "4B", "MRI": "4C"}


def scripted_features(schema):
    values = {
        "age": 62,
        "breast_density": 3,
        "family_history": 1,
        "age_menarche": 12,
        "age_first_birth": 29,
        "num_biopsies": 1,
        "hormonal_history": 1,
    }
    # Schema order so the recorded payload bytes match the intake form's.
    return {name: values[name] for name in schema.names}


def main_fixtures() -> None:
    os.makedirs(FIXTURES, exist_ok=True)
    config = sw.default_generator_config().with_overrides(population=2000)
    ds = sw.generate(config, seed=77)
    policy = build_policy(ds, PolicyConfig())
    features = scripted_features(policy.schema)

    exchanges = []
    app = create_app(policy)
    with TestClient(app) as client:
        policy_view = client.get("/api/v1/policy").json()

        body = json.dumps({"features": features}, separators=(",", ":"))
        response = client.post(
            "/api/v1/sessions", content=body, headers={"content-type": "application/json"}
        )
        session = response.json()
        exchanges.append(
            {
                "method": "POST",
                "path": "/api/v1/sessions",
                "body": body,
                "status": response.status_code,
                "response": session,
            }
        )
        while session["status"] == "awaiting_outcome":
            test = session["recommended_test"]
            body = json.dumps(
                {"test": test, "birads": SCORES[test]}, separators=(",", ":")
            )
            response = client.post(
                f"/api/v1/sessions/{session['session_id']}/outcomes",
                content=body,
                headers={"content-type": "application/json"},
            )
            session = response.json()
            exchanges.append(
                {
                    "method": "POST",
                    "path": f"/api/v1/sessions/{exchanges[0]['response']['session_id']}/outcomes",
                    "body": body,
                    "status": response.status_code,
                    "response": session,
                }
            )

    with tempfile.TemporaryDirectory() as tmp:
        policy_path = os.path.join(tmp, "policy.json")
        save_policy(policy, policy_path)
        answers = dict(SCORES)

        def scripted_input(prompt=""):
            match = re.search(r"BI-RADS result for (\w+)", prompt)
            assert match, f"unexpected prompt: {prompt!r}"
            return answers[match.group(1)]

        original_input = builtins.input
        builtins.input = scripted_input
        stdout = io.StringIO()
        try:
            with contextlib.redirect_stdout(stdout):
                code = main(
                    [
                        "execute",
                        "--policy",
                        policy_path,
                        "--features",
                        json.dumps(features),
                    ]
                )
        finally:
            builtins.input = original_input
        assert code == 0
        transcript = stdout.getvalue()

    with open(os.path.join(FIXTURES, "policy.json"), "w") as handle:
        json.dump(policy_view, handle, indent=1)
        handle.write("\n")
    with open(os.path.join(FIXTURES, "flow.json"), "w") as handle:
        json.dump(
            {"features": features, "scores": SCORES, "exchanges": exchanges},
            handle,
            indent=1,
        )
        handle.write("\n")
    with open(os.path.join(FIXTURES, "transcript.txt"), "w") as handle:
        handle.write(transcript)
    print(
        f"fixtures written: {len(exchanges)} exchanges, "
        f"{len(transcript.splitlines())} transcript lines"
    )


if __name__ == "__main__":
    main_fixtures()
