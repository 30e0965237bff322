import { describe, expect, test } from 'vitest';

import { ApiClient } from '../src/api';
import { SearchMode } from '../src/searchMode';
import type { SearchHit } from '../src/types';

const CORPUS: SearchHit[] = Array.from({ length: 55 }, (_, i) => ({
  example_id: `doc${String(i).padStart(3, '0')}`,
  spans: [[0, 3]] as [number, number][],
  content: `doc number ${i} mentions policy`,
}));

/** Fake server: pages CORPUS exactly like the real search endpoint. */
function fakeApi(log: string[] = []): ApiClient {
  const fetchImpl = async (url: string): Promise<Response> => {
    log.push(url);
    const params = new URL(url, 'http://x').searchParams;
    const limit = Number(params.get('limit'));
    const offset = Number(params.get('offset'));
    const page = CORPUS.slice(offset, offset + limit);
    return new Response(
      JSON.stringify({
        format_version: 1,
        total: CORPUS.length,
        examined: CORPUS.length,
        results: page,
      }),
      { status: 200 },
    );
  };
  return new ApiClient('http://x', 'token', fetchImpl);
}

describe('search mode infinite scroll', () => {
  test('displayed ids equal the API response ids, page after page', async () => {
    const mode = new SearchMode(fakeApi(), 'ds', { pageSize: 20 });
    await mode.setQuery('policy');
    expect(mode.displayedIds()).toEqual(CORPUS.slice(0, 20).map((h) => h.example_id));

    await mode.loadMore();
    await mode.loadMore();
    expect(mode.displayedIds()).toEqual(CORPUS.map((h) => h.example_id));
    expect(mode.hasMore()).toBe(false);
  });

  test('empty query streams the whole dataset in order', async () => {
    const mode = new SearchMode(fakeApi(), 'ds', { pageSize: 30 });
    await mode.setQuery('');
    expect(mode.totalMatches()).toBe(55);
    expect(mode.displayedIds()).toEqual(CORPUS.slice(0, 30).map((h) => h.example_id));
  });

  test('a new query resets the stream', async () => {
    const mode = new SearchMode(fakeApi(), 'ds', { pageSize: 10 });
    await mode.setQuery('first');
    await mode.loadMore();
    expect(mode.displayedIds()).toHaveLength(20);
    await mode.setQuery('second');
    expect(mode.displayedIds()).toHaveLength(10);
    expect(mode.displayedIds()).toEqual(CORPUS.slice(0, 10).map((h) => h.example_id));
  });

  test('requests carry the token and search parameters', async () => {
    const log: string[] = [];
    const mode = new SearchMode(fakeApi(log), 'ds', { pageSize: 5, caseSensitive: true });
    await mode.setQuery('White House');
    expect(log[0]).toContain('/datasets/ds/search?');
    expect(log[0]).toContain('q=White+House');
    expect(log[0]).toContain('case_sensitive=true');
    expect(log[0]).toContain('limit=5');
  });
});
