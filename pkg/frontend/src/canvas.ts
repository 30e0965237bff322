/**
 * Annotation canvas state for one task: uncommitted local annotations,
 * pre-annotation interactions, and crash-safe persistence.
 *
 * Pre-annotations cost zero actions when ignored: hovering reveals
 * accept/reject, a single batch-accept converts every pending one, and
 * nothing is sent to the server until submit. Uncommitted work is saved per
 * task so a reload restores it.
 */

import type { Payload, PreAnnotationView, SpanPayload } from './types';
import { normalizeSpan } from './spans';

export interface LocalAnnotation {
  payload: Payload;
  fromPreannotation: string | null; // pre-annotation id when accepted from one
}

/** Minimal storage interface; window.localStorage satisfies it. */
export interface KeyValueStorage {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

interface SavedState {
  annotations: LocalAnnotation[];
  rejectedPreannotations: string[];
}

export class AnnotationCanvas {
  readonly taskId: string;
  readonly content: string;
  private annotations: LocalAnnotation[] = [];
  private allPre = new Map<string, PreAnnotationView>();
  private pending = new Map<string, PreAnnotationView>();
  private rejectedPre = new Set<string>();
  private hovered: string | null = null;

  constructor(
    taskId: string,
    content: string,
    preannotations: PreAnnotationView[],
    private storage: KeyValueStorage | null = null,
  ) {
    this.taskId = taskId;
    this.content = content;
    for (const pre of preannotations) {
      this.allPre.set(pre.id, pre);
      if (pre.state === 'pending') this.pending.set(pre.id, pre);
    }
    this.restore();
  }

  private storageKey(): string {
    return `labelkit.draft.${this.taskId}`;
  }

  private persist(): void {
    if (!this.storage) return;
    const saved: SavedState = {
      annotations: this.annotations,
      rejectedPreannotations: [...this.rejectedPre],
    };
    this.storage.setItem(this.storageKey(), JSON.stringify(saved));
  }

  private restore(): void {
    if (!this.storage) return;
    const raw = this.storage.getItem(this.storageKey());
    if (!raw) return;
    const saved = JSON.parse(raw) as SavedState;
    this.annotations = saved.annotations;
    this.rejectedPre = new Set(saved.rejectedPreannotations);
    for (const annotation of this.annotations) {
      if (annotation.fromPreannotation) this.pending.delete(annotation.fromPreannotation);
    }
    for (const id of this.rejectedPre) this.pending.delete(id);
  }

  localAnnotations(): readonly LocalAnnotation[] {
    return this.annotations;
  }

  pendingPreannotations(): PreAnnotationView[] {
    return [...this.pending.values()];
  }

  hover(preannotationId: string | null): void {
    this.hovered = preannotationId !== null && this.pending.has(preannotationId)
      ? preannotationId
      : null;
  }

  hoveredPreannotation(): string | null {
    return this.hovered;
  }

  /** Add a span from a text selection; rejects anything that fails
   * normalization so invalid spans are never displayed. */
  addSpan(start: number, end: number, tag: string): SpanPayload | null {
    const normalized = normalizeSpan(this.content, start, end);
    if (!normalized) return null;
    const payload: SpanPayload = { kind: 'span', start: normalized.start, end: normalized.end, tag };
    this.annotations.push({ payload, fromPreannotation: null });
    this.persist();
    return payload;
  }

  addClass(classId: string, mode: 'single-label' | 'multi-label'): void {
    if (mode === 'single-label') {
      this.annotations = this.annotations.filter((a) => a.payload.kind !== 'class');
    }
    this.annotations.push({ payload: { kind: 'class', class_id: classId }, fromPreannotation: null });
    this.persist();
  }

  removeAnnotation(index: number): void {
    const [removed] = this.annotations.splice(index, 1);
    if (removed?.fromPreannotation) {
      // an un-accepted pre-annotation returns to the pending pool
      const pre = this.allPre.get(removed.fromPreannotation);
      if (pre) this.pending.set(pre.id, pre);
    }
    this.persist();
  }

  acceptPreannotation(preannotationId: string): boolean {
    const pre = this.pending.get(preannotationId);
    if (!pre) return false;
    this.pending.delete(preannotationId);
    this.annotations.push({ payload: pre.payload, fromPreannotation: pre.id });
    if (this.hovered === preannotationId) this.hovered = null;
    this.persist();
    return true;
  }

  rejectPreannotation(preannotationId: string): boolean {
    if (!this.pending.delete(preannotationId)) return false;
    this.rejectedPre.add(preannotationId);
    if (this.hovered === preannotationId) this.hovered = null;
    this.persist();
    return true;
  }

  /** One click: every pending pre-annotation becomes a local annotation. */
  batchAcceptAll(): number {
    const ids = [...this.pending.keys()];
    for (const id of ids) this.acceptPreannotation(id);
    return ids.length;
  }

  /** The submit request body; ignored pre-annotations appear nowhere in it. */
  buildSubmission(): {
    payloads: Payload[];
    accepted_preannotations: string[];
    rejected_preannotations: string[];
  } {
    return {
      payloads: this.annotations
        .filter((a) => a.fromPreannotation === null)
        .map((a) => a.payload),
      accepted_preannotations: this.annotations
        .filter((a) => a.fromPreannotation !== null)
        .map((a) => a.fromPreannotation!),
      rejected_preannotations: [...this.rejectedPre],
    };
  }

  /** Called after a successful submit. */
  clearDraft(): void {
    if (this.storage) this.storage.removeItem(this.storageKey());
  }
}
