/**
 * Application shell: connect, annotate, search, and review screens.
 *
 * Keyboard-only operation: every annotation action has a shortcut —
 * arrows + Enter drive the taxonomy picker, "a"/"x" accept/reject the
 * hovered pre-annotation, "b" batch-accepts all of them, "Ctrl+Enter"
 * submits, "n" fetches the next task. Mouse selection and drag-drop remain
 * available for the same actions.
 */

import { ApiClient, ApiError } from '../api';
import { AnnotationCanvas } from '../canvas';
import { orderContextGroup } from '../context';
import { RelationTree } from '../relationTree';
import { ReviewScreen, LexicalReviewStream } from '../review';
import { SearchMode } from '../searchMode';
import { TaxonomyPicker } from '../taxonomy';
import type { LeasedTask, Schema, SpanPayload, TaskView } from '../types';
import { el, renderAnnotatedText, selectionOffsets, type PaintSpan } from './render';

interface AppState {
  api: ApiClient | null;
  jobId: string;
  datasetId: string;
  schema: Schema | null;
  canvas: AnnotationCanvas | null;
  task: TaskView | null;
  tree: RelationTree;
  picker: TaxonomyPicker | null;
  myTasksByExample: Map<string, TaskView>;
}

const state: AppState = {
  api: null,
  jobId: '',
  datasetId: '',
  schema: null,
  canvas: null,
  task: null,
  tree: new RelationTree(),
  picker: null,
  myTasksByExample: new Map(),
};

const root = () => document.getElementById('app')!;

function setStatus(message: string, isError = false): void {
  const bar = document.getElementById('status')!;
  bar.textContent = message;
  bar.className = isError ? 'status error' : 'status';
}

function describeError(error: unknown): string {
  if (error instanceof ApiError) {
    const body = error.body as { detail?: unknown; error?: string } | null;
    return `${error.status}: ${body?.error ?? ''} ${JSON.stringify(body?.detail ?? '')}`;
  }
  return String(error);
}

// ---------------------------------------------------------------------------
// Connect screen

function renderConnect(): void {
  const server = el('input', { id: 'server', value: 'http://127.0.0.1:8100', 'aria-label': 'Server URL' });
  const token = el('input', { id: 'token', type: 'password', 'aria-label': 'Access token' });
  const job = el('input', { id: 'job', 'aria-label': 'Job id' });
  const connect = el('button', {}, 'Connect');
  connect.onclick = async () => {
    state.api = new ApiClient(server.value.replace(/\/$/, ''), token.value);
    state.jobId = job.value.trim();
    try {
      const info = await state.api.getJob(state.jobId);
      state.datasetId = info.dataset_id;
      state.schema = await state.api.getSchema(info.schema_id);
      state.picker = new TaxonomyPicker(
        state.schema.entity_tags.map((t) => ({ id: t.id, name: t.name, color: t.color })),
      );
      await refreshMyTasks();
      setStatus(`connected to job ${state.jobId}`);
      renderTabs('annotate');
    } catch (error) {
      setStatus(describeError(error), true);
    }
  };
  root().replaceChildren(
    el('div', { class: 'connect' },
      el('h1', {}, 'labelkit'),
      el('label', {}, 'Server ', server),
      el('label', {}, 'Token ', token),
      el('label', {}, 'Job ', job),
      connect,
    ),
  );
}

async function refreshMyTasks(): Promise<void> {
  if (!state.api) return;
  try {
    const mine = await state.api.myTasks(state.jobId);
    state.myTasksByExample = new Map(mine.tasks.map((t) => [t.example_id, t]));
  } catch {
    state.myTasksByExample = new Map(); // manager tokens have no task queue
  }
}

// ---------------------------------------------------------------------------
// Tabs

function renderTabs(active: 'annotate' | 'search' | 'review'): void {
  const tabs = el('nav', { class: 'tabs' });
  for (const name of ['annotate', 'search', 'review'] as const) {
    const button = el('button', { class: name === active ? 'tab active' : 'tab' }, name);
    button.onclick = () => renderTabs(name);
    tabs.appendChild(button);
  }
  const body = el('div', { id: 'screen' });
  root().replaceChildren(tabs, body);
  if (active === 'annotate') void renderAnnotate(body);
  if (active === 'search') renderSearch(body);
  if (active === 'review') renderReview(body);
}

// ---------------------------------------------------------------------------
// Annotate screen

async function renderAnnotate(container: HTMLElement, taskId?: string): Promise<void> {
  if (!state.api || !state.schema) return;
  let leased: LeasedTask;
  try {
    leased = taskId ? await state.api.getTask(taskId) : await state.api.nextTask(state.jobId);
  } catch (error) {
    setStatus(describeError(error), true);
    return;
  }
  if (!leased.task) {
    container.replaceChildren(el('p', { class: 'done' }, 'No tasks left — queue drained.'));
    return;
  }
  state.task = leased.task;
  state.canvas = new AnnotationCanvas(
    leased.task.id,
    leased.example!.content,
    leased.preannotations ?? [],
    window.localStorage,
  );
  state.tree = new RelationTree();

  const contextPane = el('div', { class: 'context' });
  try {
    const context = await state.api.exampleContext(state.datasetId, leased.example!.id);
    if (context.group.length > 1) {
      for (const entry of context.group) {
        contextPane.appendChild(
          el('div', { class: entry.editable ? 'context-row editable' : 'context-row' },
            el('span', { class: 'context-meta' }, entry.editable ? '✎ ' : ''),
            entry.content,
          ),
        );
      }
    }
  } catch {
    /* context display is optional */
  }

  paintCanvas(container, contextPane);
}

function paintCanvas(container: HTMLElement, contextPane?: HTMLElement): void {
  const canvas = state.canvas;
  const schema = state.schema;
  if (!canvas || !schema || !state.task) return;

  const spans: PaintSpan[] = [];
  canvas.localAnnotations().forEach((annotation, index) => {
    if (annotation.payload.kind !== 'span') return;
    spans.push({
      start: annotation.payload.start,
      end: annotation.payload.end,
      className: 'annotation',
      title: `${annotation.payload.tag} (click to remove)`,
      data: { annotationIndex: String(index), tag: annotation.payload.tag },
    });
  });
  for (const pre of canvas.pendingPreannotations()) {
    if (pre.payload.kind !== 'span') continue;
    spans.push({
      start: pre.payload.start,
      end: pre.payload.end,
      className: 'preannotation',
      title: `suggested ${pre.payload.tag} — hover: a=accept x=reject`,
      data: { preId: pre.id },
    });
  }

  const text = renderAnnotatedText(canvas.content, spans);
  text.id = 'canvas-text';
  text.tabIndex = 0;
  text.addEventListener('mouseover', (event) => {
    const target = event.target as HTMLElement;
    canvas.hover(target.dataset?.preId ?? null);
  });
  text.addEventListener('click', (event) => {
    const target = event.target as HTMLElement;
    if (target.dataset?.annotationIndex) {
      canvas.removeAnnotation(Number(target.dataset.annotationIndex));
      repaint();
    } else if (target.dataset?.preId) {
      canvas.acceptPreannotation(target.dataset.preId);
      repaint();
    }
  });
  text.addEventListener('mouseup', () => {
    const offsets = selectionOffsets(text, canvas.content);
    const tag = state.picker?.highlighted();
    if (offsets && tag) {
      canvas.addSpan(offsets.start, offsets.end, tag.id);
      window.getSelection()?.removeAllRanges();
      repaint();
    }
  });

  const taxonomyBox = el('input', {
    id: 'taxonomy',
    placeholder: 'search tags… (↑↓ Enter)',
    'aria-label': 'Search taxonomy',
  });
  const taxonomyList = el('ul', { class: 'taxonomy-results' });
  const repaintTaxonomy = () => {
    const results = state.picker?.currentResults() ?? [];
    taxonomyList.replaceChildren(
      ...(results.length
        ? results.map((entry) =>
            el('li', {
              class: entry.id === state.picker?.highlighted()?.id ? 'hit selected' : 'hit',
            }, `${entry.name} (${entry.id})`),
          )
        : [el('li', { class: 'empty' }, 'no matching class')]),
    );
  };
  taxonomyBox.addEventListener('input', () => {
    state.picker?.setQuery(taxonomyBox.value);
    repaintTaxonomy();
  });
  taxonomyBox.addEventListener('keydown', (event) => {
    if (event.key === 'ArrowDown') state.picker?.moveCursor(1);
    else if (event.key === 'ArrowUp') state.picker?.moveCursor(-1);
    else if (event.key === 'Enter') state.picker?.confirm();
    else return;
    event.preventDefault();
    repaintTaxonomy();
  });

  const classButtons = el('div', { class: 'classes' });
  for (const classId of schema.classes) {
    const button = el('button', {}, classId);
    button.onclick = () => {
      canvas.addClass(classId, schema.classification_mode);
      repaint();
    };
    classButtons.appendChild(button);
  }

  const pendingCount = canvas.pendingPreannotations().length;
  const batchButton = el('button', { id: 'batch-accept' },
    `Accept all ${pendingCount} suggestions (b)`);
  batchButton.onclick = () => {
    canvas.batchAcceptAll();
    repaint();
  };
  if (!pendingCount) batchButton.disabled = true;

  const submitButton = el('button', { id: 'submit', class: 'primary' }, 'Submit (Ctrl+Enter)');
  submitButton.onclick = () => void submitCurrent();

  const annotationList = el('ul', { class: 'annotations' });
  canvas.localAnnotations().forEach((annotation, index) => {
    const label =
      annotation.payload.kind === 'span'
        ? `[${annotation.payload.start},${annotation.payload.end}) ${annotation.payload.tag}`
        : annotation.payload.kind === 'class'
          ? `class ${annotation.payload.class_id}`
          : `relation (${annotation.payload.edges.length} edges)`;
    const remove = el('button', { class: 'remove', 'aria-label': `remove ${label}` }, '×');
    remove.onclick = () => {
      canvas.removeAnnotation(index);
      repaint();
    };
    annotationList.appendChild(el('li', {}, label, ' ', remove));
  });

  function repaint(): void {
    paintCanvas(container, contextPane);
  }

  container.replaceChildren(
    ...(contextPane && contextPane.childNodes.length ? [contextPane] : []),
    text,
    el('div', { class: 'sidebar' },
      taxonomyBox,
      taxonomyList,
      classButtons,
      batchButton,
      annotationList,
      submitButton,
    ),
  );
  repaintTaxonomy();
}

async function submitCurrent(): Promise<void> {
  if (!state.api || !state.canvas || !state.task) return;
  const body = state.canvas.buildSubmission();
  const relation = state.tree.toPayload();
  if (relation) body.payloads.push(relation);
  try {
    await state.api.submitTask(
      state.task.id, body.payloads, body.accepted_preannotations, body.rejected_preannotations,
    );
    state.canvas.clearDraft();
    setStatus('submitted — fetching next task');
    const screen = document.getElementById('screen');
    if (screen) await renderAnnotate(screen);
  } catch (error) {
    setStatus(describeError(error), true);
  }
}

document.addEventListener('keydown', (event) => {
  const canvas = state.canvas;
  if (!canvas || (event.target as HTMLElement).tagName === 'INPUT') {
    if (event.key === 'Enter' && event.ctrlKey) void submitCurrent();
    return;
  }
  if (event.key === 'a' && canvas.hoveredPreannotation()) {
    canvas.acceptPreannotation(canvas.hoveredPreannotation()!);
  } else if (event.key === 'x' && canvas.hoveredPreannotation()) {
    canvas.rejectPreannotation(canvas.hoveredPreannotation()!);
  } else if (event.key === 'b') {
    document.getElementById('batch-accept')?.click();
    return;
  } else if (event.key === 'n') {
    const screen = document.getElementById('screen');
    if (screen) void renderAnnotate(screen);
    return;
  } else if (event.key === 'Enter' && event.ctrlKey) {
    void submitCurrent();
    return;
  } else {
    return;
  }
  const screen = document.getElementById('screen');
  if (screen) paintCanvas(screen);
});

// ---------------------------------------------------------------------------
// Search screen

function renderSearch(container: HTMLElement): void {
  if (!state.api) return;
  const mode = new SearchMode(state.api, state.datasetId, { pageSize: 20 });
  const queryBox = el('input', {
    id: 'search-query',
    placeholder: 'regex over the dataset — empty streams everything',
    'aria-label': 'Search query',
  });
  const results = el('div', { class: 'search-results' });
  const sentinel = el('div', { class: 'sentinel' });

  const paintHits = () => {
    results.replaceChildren(
      ...mode.displayedHits().map((hit) => {
        const spans: PaintSpan[] = hit.spans
          .filter(([s, e]) => s !== e)
          .map(([start, end]) => ({ start, end, className: 'match' }));
        const row = el('article', { class: 'search-hit', 'data-example': hit.example_id });
        row.appendChild(renderAnnotatedText(hit.content, spans));
        const task = state.myTasksByExample.get(hit.example_id);
        if (task && task.state !== 'submitted') {
          const annotate = el('button', {}, 'annotate');
          annotate.onclick = async () => {
            try {
              await state.api!.leaseTask(task.id);
              const screen = document.getElementById('screen');
              renderTabs('annotate');
              if (screen) await renderAnnotate(document.getElementById('screen')!, task.id);
            } catch (error) {
              setStatus(describeError(error), true);
            }
          };
          row.appendChild(annotate);
        }
        return row;
      }),
      sentinel,
      mode.hasMore() ? el('p', { class: 'more' }, 'scroll for more…') : el('p', {}, `${mode.totalMatches()} matches`),
    );
  };

  let timer: number | undefined;
  queryBox.addEventListener('input', () => {
    window.clearTimeout(timer);
    timer = window.setTimeout(async () => {
      try {
        await mode.setQuery(queryBox.value);
        paintHits();
      } catch (error) {
        setStatus(describeError(error), true);
      }
    }, 250);
  });

  const observer = new IntersectionObserver(async (entries) => {
    if (entries.some((e) => e.isIntersecting) && mode.hasMore() && !mode.isLoading()) {
      await mode.loadMore();
      paintHits();
    }
  });
  observer.observe(sentinel);

  container.replaceChildren(queryBox, results);
  void mode.setQuery('').then(paintHits);
}

// ---------------------------------------------------------------------------
// Review screen

function renderReview(container: HTMLElement): void {
  if (!state.api) return;
  const screen = new ReviewScreen(state.api, state.jobId);
  const lexical = new LexicalReviewStream(state.api, state.jobId);

  const exampleBox = el('input', { placeholder: 'example id', 'aria-label': 'Example id' });
  const loadButton = el('button', {}, 'Load');
  const thresholdBox = el('input', { value: '0.66', size: '4', 'aria-label': 'Threshold' });
  const batchButton = el('button', {}, 'Batch accept ≥ threshold');
  const groupsPane = el('div', { class: 'review-groups' });
  const lexicalPane = el('div', { class: 'lexical' });

  const paintGroups = () => {
    const view = screen.current();
    if (!view) return;
    groupsPane.replaceChildren(
      el('p', {}, `${view.seen} annotators saw this example`),
      ...view.groups.map((group) => {
        const verdict = group.judgment?.verdict ?? 'unjudged';
        const conflictNote = screen.conflictsOf(group.ideal_id).length
          ? ` ⚠ conflicts with ${screen.conflictsOf(group.ideal_id).length}`
          : '';
        const accept = el('button', {}, 'accept');
        accept.onclick = async () => {
          try {
            await screen.accept(group.ideal_id);
            paintGroups(); // losers repaint as rejected, no reload
          } catch (error) {
            setStatus(describeError(error), true);
          }
        };
        const reject = el('button', {}, 'reject');
        reject.onclick = async () => {
          await screen.reject(group.ideal_id);
          paintGroups();
        };
        return el('div', { class: `group ${verdict}` },
          el('span', { class: 'payload' }, JSON.stringify(group.payload)),
          el('span', { class: 'support' },
            ` ${group.event_count}× by ${group.annotator_ids.join(', ')}${conflictNote} — ${verdict} `),
          accept, reject,
        );
      }),
    );
  };

  loadButton.onclick = async () => {
    try {
      await screen.load(exampleBox.value.trim());
      paintGroups();
    } catch (error) {
      setStatus(describeError(error), true);
    }
  };
  batchButton.onclick = async () => {
    try {
      const accepted = await screen.batchAccept(Number(thresholdBox.value));
      setStatus(`batch accepted ${accepted} ideals`);
      paintGroups();
    } catch (error) {
      setStatus(describeError(error), true);
    }
  };

  const paintLexical = () => {
    lexicalPane.replaceChildren(
      el('h3', {}, 'Batch lexical review'),
      ...lexical.pendingGroups().map((group) => {
        const acceptAll = el('button', {}, 'accept all');
        acceptAll.onclick = async () => {
          try {
            await lexical.reviewGroup(group, 'accepted');
            paintLexical(); // reviewed group leaves the pending stream
          } catch (error) {
            setStatus(describeError(error), true);
          }
        };
        const rejectAll = el('button', {}, 'reject all');
        rejectAll.onclick = async () => {
          await lexical.reviewGroup(group, 'rejected');
          paintLexical();
        };
        return el('div', { class: 'lexical-group' },
          el('strong', {}, `"${group.surface}"`),
          ` → ${group.tag} (${group.event_count} events, ${group.ideal_ids.length} ideals) `,
          acceptAll, rejectAll,
        );
      }),
    );
  };
  void lexical.load().then(paintLexical);

  container.replaceChildren(
    el('div', { class: 'review-toolbar' }, exampleBox, loadButton, thresholdBox, batchButton),
    groupsPane,
    lexicalPane,
  );
}

renderConnect();
