/** Split sentence text into render segments around the two argument spans.
 *
 * Offsets come from the server untouched; the invariant that the segment
 * texts concatenate back to the exact sentence is what keeps the UI from
 * ever mutating text.
 */

export interface Range {
  start: number;
  end: number;
}

export interface Segment {
  text: string;
  role: "plain" | "e1" | "e2";
}

export function splitSegments(text: string, e1: Range, e2: Range): Segment[] {
  for (const [name, range] of [["e1", e1], ["e2", e2]] as const) {
    if (range.start < 0 || range.end > text.length || range.start >= range.end) {
      throw new Error(`${name} range [${range.start}, ${range.end}) is out of bounds`);
    }
  }
  const first = e1.start <= e2.start ? { ...e1, role: "e1" as const } : { ...e2, role: "e2" as const };
  const second = first.role === "e1" ? { ...e2, role: "e2" as const } : { ...e1, role: "e1" as const };
  if (second.start < first.end) {
    throw new Error("argument spans overlap");
  }
  const segments: Segment[] = [];
  const push = (piece: string, role: Segment["role"]) => {
    if (piece.length > 0) segments.push({ text: piece, role });
  };
  push(text.slice(0, first.start), "plain");
  push(text.slice(first.start, first.end), first.role);
  push(text.slice(first.end, second.start), "plain");
  push(text.slice(second.start, second.end), second.role);
  push(text.slice(second.end), "plain");
  return segments;
}

export function concatSegments(segments: Segment[]): string {
  return segments.map((s) => s.text).join("");
}
