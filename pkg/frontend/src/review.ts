/**
 * Review screen state: the consolidated view of one example with agreement
 * counts and conflicts, verdict actions, and the threshold batch button.
 *
 * Accepting an ideal applies the server's transitive rejections to the view
 * immediately — the overlapping loser repaints as rejected without a page
 * reload. State is optimistic only in ordering: every mutation uses the
 * server response, so a conflicting verdict from the server always wins.
 */

import type { ApiClient } from './api';
import type { ConsolidatedView, LexicalGroupView, ReviewGroup } from './types';

export class ReviewScreen {
  private view: ConsolidatedView | null = null;

  constructor(
    private api: ApiClient,
    private jobId: string,
  ) {}

  async load(exampleId: string, scope = 'all'): Promise<ConsolidatedView> {
    this.view = await this.api.reviewExample(this.jobId, exampleId, scope);
    return this.view;
  }

  current(): ConsolidatedView | null {
    return this.view;
  }

  groups(): readonly ReviewGroup[] {
    return this.view?.groups ?? [];
  }

  verdictOf(idealId: string): 'accepted' | 'rejected' | null {
    const group = this.view?.groups.find((g) => g.ideal_id === idealId);
    return group?.judgment?.verdict ?? null;
  }

  conflictsOf(idealId: string): string[] {
    if (!this.view) return [];
    return this.view.conflicts
      .filter((pair) => pair.includes(idealId))
      .map(([a, b]) => (a === idealId ? b : a));
  }

  /**
   * Accept an ideal; the accepted group and every transitively rejected
   * group repaint from the server response. Throws ApiError(409) when a
   * conflicting ideal is already accepted.
   */
  async accept(idealId: string): Promise<string[]> {
    const response = await this.api.acceptIdeal(idealId, this.jobId);
    this.paint(idealId, 'accepted', 'manual');
    for (const rejected of response.transitive_rejections) {
      this.paint(rejected, 'rejected', 'transitive');
    }
    return response.transitive_rejections;
  }

  async reject(idealId: string): Promise<void> {
    await this.api.rejectIdeal(idealId, this.jobId);
    this.paint(idealId, 'rejected', 'manual');
  }

  /** Threshold batch-accept; reloads the example so every repaint is exact. */
  async batchAccept(threshold: number): Promise<number> {
    const response = await this.api.batchAccept(this.jobId, threshold);
    if (this.view) await this.load(this.view.example_id);
    return response.accepted;
  }

  private paint(idealId: string, verdict: 'accepted' | 'rejected', cause: string): void {
    const group = this.view?.groups.find((g) => g.ideal_id === idealId);
    if (group) group.judgment = { verdict, cause };
  }
}

/** Stream of lexical groups for batch review; reviewed groups leave the
 * pending list. */
export class LexicalReviewStream {
  private groups: LexicalGroupView[] = [];

  constructor(
    private api: ApiClient,
    private jobId: string,
  ) {}

  async load(scope = 'all'): Promise<void> {
    this.groups = (await this.api.lexicalGroups(this.jobId, scope)).groups;
  }

  /** Groups still holding at least one unjudged ideal, Zipf order. */
  pendingGroups(): LexicalGroupView[] {
    return this.groups.filter((g) => g.pending_ideal_ids.length > 0);
  }

  allGroups(): readonly LexicalGroupView[] {
    return this.groups;
  }

  async reviewGroup(
    group: LexicalGroupView,
    verdict: 'accepted' | 'rejected',
  ): Promise<number> {
    const response = await this.api.reviewLexicalGroup(
      this.jobId, group.surface, group.tag, verdict,
    );
    const entry = this.groups.find((g) => g.surface === group.surface && g.tag === group.tag);
    if (entry) entry.pending_ideal_ids = [];
    return response.judgments;
  }
}
