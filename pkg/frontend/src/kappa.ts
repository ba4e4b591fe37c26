/** Cohen's kappa, computed client-side to sanity-check the live panel. */

export interface KappaResult {
  kappa: number;
  observed: number;
  expected: number;
  n: number;
}

export function cohenKappa(a: string[], b: string[]): KappaResult {
  if (a.length !== b.length || a.length === 0) {
    throw new Error("kappa needs two equally sized, non-empty decision lists");
  }
  const n = a.length;
  let agree = 0;
  const countsA = new Map<string, number>();
  const countsB = new Map<string, number>();
  for (let i = 0; i < n; i++) {
    if (a[i] === b[i]) agree += 1;
    countsA.set(a[i], (countsA.get(a[i]) ?? 0) + 1);
    countsB.set(b[i], (countsB.get(b[i]) ?? 0) + 1);
  }
  const observed = agree / n;
  let expected = 0;
  for (const [label, countA] of countsA) {
    expected += (countA / n) * ((countsB.get(label) ?? 0) / n);
  }
  const kappa =
    expected >= 1 ? (observed === 1 ? 1 : 0) : (observed - expected) / (1 - expected);
  return { kappa, observed, expected, n };
}
