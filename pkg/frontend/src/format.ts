/** Number formatting kept in lockstep with the terminal client's output. */

export function fixed(value: number, digits: number): string {
  return value.toFixed(digits);
}

export function verdictText(label: 0 | 1): string {
  return label === 1 ? "biopsy referral" : "regular followup";
}

export function intervalText(interval: [number, number]): string {
  return `[${fixed(interval[0], 3)}, ${fixed(interval[1], 3)}]`;
}
