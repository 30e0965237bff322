import { describe, expect, test } from 'vitest';

import {
  codePointToUtf16,
  normalizeSpan,
  spansOverlap,
  surfaceForm,
  utf16ToCodePoint,
} from '../src/spans';

describe('normalizeSpan', () => {
  test('trims surrounding whitespace', () => {
    expect(normalizeSpan('  foo ', 0, 6)).toEqual({ start: 2, end: 5 });
  });

  test('leaves clean selections alone', () => {
    expect(normalizeSpan('abc', 0, 3)).toEqual({ start: 0, end: 3 });
  });

  test('rejects all-whitespace selections', () => {
    expect(normalizeSpan('a b', 1, 2)).toBeNull();
  });

  test('rejects out-of-bounds selections', () => {
    expect(normalizeSpan('abc', 0, 4)).toBeNull();
    expect(normalizeSpan('abc', 2, 2)).toBeNull();
  });

  test('is idempotent', () => {
    const once = normalizeSpan(' hello world ', 0, 13)!;
    expect(normalizeSpan(' hello world ', once.start, once.end)).toEqual(once);
  });

  test('counts code points, not UTF-16 units', () => {
    const content = '🎉🎉 party';
    // each emoji is one code point but two UTF-16 units
    expect(normalizeSpan(content, 0, 2)).toEqual({ start: 0, end: 2 });
    expect(surfaceForm(content, 0, 2)).toBe('🎉🎉');
    expect(surfaceForm(content, 3, 8)).toBe('party');
  });
});

describe('offset conversion', () => {
  test('round-trips through astral characters', () => {
    const content = 'a🎉b🎉c';
    for (let cp = 0; cp <= 5; cp++) {
      expect(utf16ToCodePoint(content, codePointToUtf16(content, cp))).toBe(cp);
    }
    expect(codePointToUtf16(content, 2)).toBe(3); // after 'a🎉'
  });
});

describe('spansOverlap', () => {
  test('any shared offset counts', () => {
    expect(spansOverlap({ start: 0, end: 11 }, { start: 0, end: 5 })).toBe(true);
    expect(spansOverlap({ start: 0, end: 5 }, { start: 5, end: 9 })).toBe(false);
    expect(spansOverlap({ start: 4, end: 6 }, { start: 5, end: 9 })).toBe(true);
  });
});
