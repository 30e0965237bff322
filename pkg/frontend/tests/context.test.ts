import { describe, expect, test } from 'vitest';

import { orderContextGroup, type ContextEntry } from '../src/context';

const CONVERSATION: ContextEntry[] = [
  { id: 'm3', content: 'sure, sending it now', metadata: { conv: 'c1', ts: 3 } },
  { id: 'm1', content: 'hi, my card was declined', metadata: { conv: 'c1', ts: 1 } },
  { id: 'm5', content: 'unrelated other thread', metadata: { conv: 'c2', ts: 2 } },
  { id: 'm2', content: 'can you send a screenshot?', metadata: { conv: 'c1', ts: 2 } },
  { id: 'm4', content: 'thanks!', metadata: { conv: 'c1', ts: 4 } },
];

describe('orderContextGroup', () => {
  test('shows the whole conversation sorted, one message editable', () => {
    const target = CONVERSATION.find((e) => e.id === 'm2')!;
    const group = orderContextGroup(target, CONVERSATION, { group_by: 'conv', sort_by: 'ts' });
    expect(group.map((e) => e.id)).toEqual(['m1', 'm2', 'm3', 'm4']);
    expect(group.map((e) => e.editable)).toEqual([false, true, false, false]);
  });

  test('sort order is nondecreasing in the sort key', () => {
    const target = CONVERSATION[0]!;
    const group = orderContextGroup(target, CONVERSATION, { group_by: 'conv', sort_by: 'ts' });
    const keys = group.map((e) => e.metadata['ts'] as number);
    for (let i = 1; i < keys.length; i++) expect(keys[i]!).toBeGreaterThanOrEqual(keys[i - 1]!);
  });

  test('no context config renders the single example', () => {
    const target = CONVERSATION[0]!;
    const group = orderContextGroup(target, CONVERSATION, null);
    expect(group).toHaveLength(1);
    expect(group[0]).toMatchObject({ id: 'm3', editable: true });
  });

  test('missing group key degrades to the single example', () => {
    const stray: ContextEntry = { id: 'x', content: 'no metadata', metadata: {} };
    const group = orderContextGroup(stray, CONVERSATION, { group_by: 'conv', sort_by: 'ts' });
    expect(group).toHaveLength(1);
    expect(group[0]!.editable).toBe(true);
  });
});
