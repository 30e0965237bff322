/**
 * Span utilities in code-point space.
 *
 * The server stores offsets as Unicode code points; JS strings index UTF-16
 * units, so DOM selection offsets must be converted before talking to the
 * API. Normalization mirrors the server: leading/trailing whitespace is
 * trimmed and an all-whitespace selection is invalid.
 */

const WHITESPACE = /^\s$/u;

export function codePoints(content: string): string[] {
  return Array.from(content);
}

/** UTF-16 index -> code-point offset. */
export function utf16ToCodePoint(content: string, utf16Index: number): number {
  return Array.from(content.slice(0, utf16Index)).length;
}

/** Code-point offset -> UTF-16 index. */
export function codePointToUtf16(content: string, cpIndex: number): number {
  let utf16 = 0;
  let remaining = cpIndex;
  for (const cp of content) {
    if (remaining-- <= 0) break;
    utf16 += cp.length;
  }
  return utf16;
}

export interface NormalizedSpan {
  start: number;
  end: number;
}

/**
 * Trim whitespace from a [start, end) code-point selection.
 * Returns null when out of bounds or entirely whitespace — such selections
 * are never shown as pending annotations.
 */
export function normalizeSpan(content: string, start: number, end: number): NormalizedSpan | null {
  const points = codePoints(content);
  if (!(0 <= start && start < end && end <= points.length)) return null;
  while (start < end && WHITESPACE.test(points[start]!)) start++;
  while (end > start && WHITESPACE.test(points[end - 1]!)) end--;
  if (start === end) return null;
  return { start, end };
}

export function spansOverlap(a: NormalizedSpan, b: NormalizedSpan): boolean {
  return a.start < b.end && b.start < a.end;
}

/** Slice by code-point offsets (what the server calls the surface form). */
export function surfaceForm(content: string, start: number, end: number): string {
  return codePoints(content).slice(start, end).join('');
}
