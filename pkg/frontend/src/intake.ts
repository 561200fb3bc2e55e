/** Patient intake form generated from the policy's feature schema. */

import type { SchemaView } from "./types.js";

const DENSITY_LABELS: Record<number, string> = {
  1: "Category 1 (almost entirely fat)",
  2: "Category 2 (scattered fibroglandular)",
  3: "Category 3 (heterogeneously dense)",
  4: "Category 4 (extremely dense)",
};

export function renderIntake(
  root: HTMLElement,
  schema: SchemaView,
  onSubmit: (features: Record<string, number>) => void,
): void {
  const form = document.createElement("form");
  form.className = "intake";
  form.setAttribute("aria-label", "patient intake");

  for (const spec of schema.features) {
    const row = document.createElement("label");
    row.className = "intake-row";
    row.textContent = `${spec.name} `;
    let input: HTMLInputElement | HTMLSelectElement;
    if (spec.name === "breast_density") {
      input = document.createElement("select");
      for (let category = 1; category <= 4; category += 1) {
        const option = document.createElement("option");
        option.value = String(category);
        option.textContent = DENSITY_LABELS[category];
        input.appendChild(option);
      }
    } else {
      input = document.createElement("input");
      input.type = "number";
      input.min = String(spec.min);
      input.max = String(spec.max);
      input.step = "any";
      input.required = true;
    }
    input.name = spec.name;
    row.appendChild(input);
    const hint = document.createElement("span");
    hint.className = "hint";
    hint.textContent = ` [${spec.min}..${spec.max}]`;
    row.appendChild(hint);
    form.appendChild(row);
  }

  const error = document.createElement("p");
  error.className = "form-error";
  error.setAttribute("role", "alert");
  form.appendChild(error);

  const submit = document.createElement("button");
  submit.type = "submit";
  submit.textContent = "Start session";
  form.appendChild(submit);

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const features: Record<string, number> = {};
    for (const spec of schema.features) {
      const field = form.elements.namedItem(spec.name) as
        | HTMLInputElement
        | HTMLSelectElement;
      const value = Number(field.value);
      if (!Number.isFinite(value)) {
        error.textContent = `${spec.name}: not a number`;
        return;
      }
      if (value < spec.min || value > spec.max) {
        error.textContent = `${spec.name}: must lie in [${spec.min}, ${spec.max}]`;
        return;
      }
      features[spec.name] = value;
    }
    error.textContent = "";
    onSubmit(features);
  });

  root.replaceChildren(form);
}
