/**
 * Contextual display ordering: all examples sharing the configured group-by
 * metadata value render together (read-only), sorted by the sort-by key,
 * with only the task's own example editable.
 */

export interface ContextConfigView {
  group_by: string;
  sort_by: string;
}

export interface ContextEntry {
  id: string;
  content: string;
  metadata: Record<string, string | number | boolean>;
}

export interface OrderedContextEntry extends ContextEntry {
  editable: boolean;
}

export function orderContextGroup(
  target: ContextEntry,
  all: ContextEntry[],
  config: ContextConfigView | null,
): OrderedContextEntry[] {
  if (!config || !(config.group_by in target.metadata)) {
    return [{ ...target, editable: true }];
  }
  const groupValue = target.metadata[config.group_by];
  const group = all.filter((e) => e.metadata[config.group_by] === groupValue);
  group.sort((a, b) => {
    const ka = a.metadata[config.sort_by];
    const kb = b.metadata[config.sort_by];
    if (ka === undefined || kb === undefined) return ka === undefined ? 1 : -1;
    if (ka < kb) return -1;
    if (ka > kb) return 1;
    return 0;
  });
  return group.map((e) => ({ ...e, editable: e.id === target.id }));
}
