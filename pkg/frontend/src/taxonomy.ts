/**
 * Searchable taxonomy picker for schemas with hundreds or thousands of
 * entries: case-insensitive substring filtering, prefix matches ranked
 * first, a hard display cap, and most-recently-used entries for the empty
 * query so frequent tags stay one keystroke away.
 */

export interface TaxonomyEntry {
  id: string;
  name: string;
  color?: string | null;
}

export const MAX_RESULTS = 20;

export function searchTaxonomy(
  entries: TaxonomyEntry[],
  query: string,
  recentIds: string[] = [],
): TaxonomyEntry[] {
  const needle = query.trim().toLowerCase();
  if (!needle) {
    const byId = new Map(entries.map((e) => [e.id, e]));
    const recent = recentIds
      .map((id) => byId.get(id))
      .filter((e): e is TaxonomyEntry => e !== undefined);
    const rest = entries.filter((e) => !recentIds.includes(e.id));
    return [...recent, ...rest].slice(0, MAX_RESULTS);
  }
  const prefix: TaxonomyEntry[] = [];
  const substring: TaxonomyEntry[] = [];
  for (const entry of entries) {
    const name = entry.name.toLowerCase();
    const id = entry.id.toLowerCase();
    if (name.startsWith(needle) || id.startsWith(needle)) prefix.push(entry);
    else if (name.includes(needle) || id.includes(needle)) substring.push(entry);
    if (prefix.length >= MAX_RESULTS) break;
  }
  return [...prefix, ...substring].slice(0, MAX_RESULTS);
}

/** Keyboard-driven selection over the current result list. */
export class TaxonomyPicker {
  private results: TaxonomyEntry[] = [];
  private cursor = 0;
  private recent: string[] = [];

  constructor(private entries: TaxonomyEntry[]) {}

  setQuery(query: string): TaxonomyEntry[] {
    this.results = searchTaxonomy(this.entries, query, this.recent);
    this.cursor = 0;
    return this.results;
  }

  currentResults(): TaxonomyEntry[] {
    return this.results;
  }

  highlighted(): TaxonomyEntry | null {
    return this.results[this.cursor] ?? null;
  }

  moveCursor(delta: 1 | -1): void {
    if (!this.results.length) return;
    this.cursor = (this.cursor + delta + this.results.length) % this.results.length;
  }

  /** Enter: pick the highlighted entry and remember it as recently used. */
  confirm(): TaxonomyEntry | null {
    const entry = this.highlighted();
    if (entry) {
      this.recent = [entry.id, ...this.recent.filter((id) => id !== entry.id)].slice(0, MAX_RESULTS);
    }
    return entry;
  }

  recentlyUsed(): string[] {
    return this.recent;
  }
}
