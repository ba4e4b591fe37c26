/** Keyboard shortcuts: digits 0-9 pick one of the ten labels, x flags a
 * processing error, Enter confirms the automatic label. */

export interface KeyDecision {
  decision: string;
  source: "digit" | "flag" | "confirm";
}

export function decisionForKey(
  key: string,
  labels: string[],
  errorFlag: string,
  autoLabel: string,
): KeyDecision | null {
  if (/^[0-9]$/.test(key)) {
    const index = Number(key);
    if (index < labels.length) {
      return { decision: labels[index], source: "digit" };
    }
    return null;
  }
  if (key === "x" || key === "X") {
    return { decision: errorFlag, source: "flag" };
  }
  if (key === "Enter") {
    return { decision: autoLabel, source: "confirm" };
  }
  return null;
}

export function shortcutLegend(labels: string[], errorFlag: string): Array<[string, string]> {
  const legend: Array<[string, string]> = labels.map((label, i) => [String(i), label]);
  legend.push(["x", errorFlag]);
  legend.push(["Enter", "confirm auto label"]);
  return legend;
}
