import type { Flag, Highlight } from './types.js';

export interface Span {
  start: number; // character offset into post_text, inclusive
  end: number; // exclusive
}

function isWordChar(ch: string | undefined): boolean {
  return ch !== undefined && /[a-z0-9]/i.test(ch);
}

/** All whole-word, case-insensitive occurrences of token inside text. */
function findTokenSpans(text: string, token: string): Span[] {
  if (!token) return [];
  const spans: Span[] = [];
  const haystack = text.toLowerCase();
  const needle = token.toLowerCase();
  let from = 0;
  while (from <= haystack.length - needle.length) {
    const at = haystack.indexOf(needle, from);
    if (at === -1) break;
    const before = text[at - 1];
    const after = text[at + needle.length];
    if (!isWordChar(before) && !isWordChar(after)) {
      spans.push({ start: at, end: at + needle.length });
    }
    from = at + 1;
  }
  return spans;
}

/**
 * Resolve highlight tokens to character ranges in post_text.
 *
 * Tokens are first validated against their clean_text word positions (the
 * API's coordinate system); tokens without usable positions fall back to a
 * plain case-insensitive search. Returned spans are sorted, clipped to the
 * text bounds, and never overlap.
 */
export function resolveHighlights(flag: Flag): Span[] {
  const cleanWords = flag.clean_text.split(' ');
  const tokens = new Set<string>();
  for (const h of flag.highlights ?? []) {
    const positionsValid =
      Array.isArray(h.positions) &&
      h.positions.length > 0 &&
      h.positions.every((p) => cleanWords[p] === h.token);
    if (positionsValid || h.token) tokens.add(h.token);
  }

  const all: Span[] = [];
  for (const token of tokens) {
    all.push(...findTokenSpans(flag.post_text, token));
  }
  all.sort((a, b) => a.start - b.start || a.end - b.end);

  const merged: Span[] = [];
  for (const span of all) {
    const start = Math.max(0, span.start);
    const end = Math.min(flag.post_text.length, span.end);
    if (end <= start) continue;
    const last = merged[merged.length - 1];
    if (last && start < last.end) continue; // drop overlapping duplicates
    merged.push({ start, end });
  }
  return merged;
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;')
    .replace(/'/g, '&#39;');
}

/** post_text with highlight spans wrapped in <mark class="hl"> emphasis. */
export function renderHighlighted(flag: Flag, spans?: Span[]): string {
  const ranges = spans ?? resolveHighlights(flag);
  const text = flag.post_text;
  let html = '';
  let cursor = 0;
  for (const { start, end } of ranges) {
    html += escapeHtml(text.slice(cursor, start));
    html += `<mark class="hl">${escapeHtml(text.slice(start, end))}</mark>`;
    cursor = end;
  }
  html += escapeHtml(text.slice(cursor));
  return html;
}

export { findTokenSpans };
