/**
 * Search mode: the whole dataset in an infinite scroll, narrowed by plain
 * text or regex queries, with matches highlighted and spans annotatable
 * directly in the result list.
 *
 * Pages are fetched from the search endpoint as the user scrolls; an empty
 * query streams the entire dataset in upload order (everything matches the
 * empty pattern).
 */

import type { ApiClient } from './api';
import type { SearchHit } from './types';

export interface SearchModeOptions {
  pageSize?: number;
  regex?: boolean;
  caseSensitive?: boolean;
}

export class SearchMode {
  private hits: SearchHit[] = [];
  private total = 0;
  private offset = 0;
  private query = '';
  private loading = false;
  private generation = 0; // stale responses from superseded queries are dropped

  constructor(
    private api: ApiClient,
    private datasetId: string,
    private options: SearchModeOptions = {},
  ) {}

  displayedHits(): readonly SearchHit[] {
    return this.hits;
  }

  displayedIds(): string[] {
    return this.hits.map((h) => h.example_id);
  }

  totalMatches(): number {
    return this.total;
  }

  hasMore(): boolean {
    return this.hits.length < this.total;
  }

  isLoading(): boolean {
    return this.loading;
  }

  /** New query: reset the stream and fetch the first page. */
  async setQuery(query: string): Promise<void> {
    this.query = query;
    this.hits = [];
    this.offset = 0;
    this.total = 0;
    this.generation++;
    await this.loadMore();
  }

  /** Fetch the next page; called by the scroll sentinel. */
  async loadMore(): Promise<void> {
    if (this.loading) return;
    this.loading = true;
    const generation = this.generation;
    try {
      const response = await this.api.search(this.datasetId, this.query || '', {
        regex: this.options.regex ?? true,
        caseSensitive: this.options.caseSensitive ?? false,
        limit: this.options.pageSize ?? 20,
        offset: this.offset,
      });
      if (generation !== this.generation) return;
      this.hits.push(...response.results);
      this.offset += response.results.length;
      this.total = response.total;
    } finally {
      this.loading = false;
    }
  }
}
