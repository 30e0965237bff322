/**
 * DOM rendering for annotated text: overlapping span layers are split into
 * flat segments so every region carries the classes of all spans covering
 * it. Offsets are code points; conversion to UTF-16 happens only here, at
 * the DOM boundary. Bidi text is left to the browser: the container uses
 * dir="auto" and offsets stay logical-order.
 */

import { codePointToUtf16 } from '../spans';

export interface PaintSpan {
  start: number; // code points
  end: number;
  className: string;
  title?: string;
  data?: Record<string, string>;
}

export function renderAnnotatedText(content: string, spans: PaintSpan[]): HTMLElement {
  const container = document.createElement('div');
  container.className = 'annotated-text';
  container.dir = 'auto';

  const boundaries = new Set<number>([0, content.length]);
  for (const span of spans) {
    boundaries.add(span.start);
    boundaries.add(span.end);
  }
  const cuts = [...boundaries].sort((a, b) => a - b);

  for (let i = 0; i < cuts.length - 1; i++) {
    const from = cuts[i]!;
    const to = cuts[i + 1]!;
    const covering = spans.filter((s) => s.start <= from && to <= s.end);
    const text = content.slice(codePointToUtf16(content, from), codePointToUtf16(content, to));
    if (!text) continue;
    if (!covering.length) {
      container.appendChild(document.createTextNode(text));
      continue;
    }
    const el = document.createElement('span');
    el.textContent = text;
    el.className = covering.map((s) => s.className).join(' ');
    const titles = covering.map((s) => s.title).filter(Boolean);
    if (titles.length) el.title = titles.join(' | ');
    for (const span of covering) {
      for (const [key, value] of Object.entries(span.data ?? {})) {
        el.dataset[key] = value;
      }
    }
    container.appendChild(el);
  }
  return container;
}

/** Current text selection within `root` as code-point offsets, or null. */
export function selectionOffsets(root: HTMLElement, content: string): { start: number; end: number } | null {
  const selection = window.getSelection();
  if (!selection || selection.rangeCount === 0 || selection.isCollapsed) return null;
  const range = selection.getRangeAt(0);
  if (!root.contains(range.startContainer) || !root.contains(range.endContainer)) return null;

  const utf16Of = (node: Node, offset: number): number => {
    let total = 0;
    const walker = document.createTreeWalker(root, NodeFilter.SHOW_TEXT);
    let current = walker.nextNode();
    while (current) {
      if (current === node) return total + offset;
      total += (current.textContent ?? '').length;
      current = walker.nextNode();
    }
    return total;
  };

  const startUtf16 = utf16Of(range.startContainer, range.startOffset);
  const endUtf16 = utf16Of(range.endContainer, range.endOffset);
  if (startUtf16 === endUtf16) return null;
  const lo = Math.min(startUtf16, endUtf16);
  const hi = Math.max(startUtf16, endUtf16);
  // UTF-16 -> code points via the rendered content string
  const toCp = (utf16: number) => Array.from(content.slice(0, utf16)).length;
  return { start: toCp(lo), end: toCp(hi) };
}

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === 'class') node.className = value;
    else node.setAttribute(key, value);
  }
  node.append(...children);
  return node;
}
