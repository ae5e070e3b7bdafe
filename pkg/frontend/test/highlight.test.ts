import { describe, expect, it } from 'vitest';

import { findTokenSpans, renderHighlighted, resolveHighlights } from '../src/highlight.js';
import { stubFlag } from './stub_server.js';

describe('resolveHighlights', () => {
  it('maps tokens to character ranges in post_text', () => {
    const flag = stubFlag();
    const spans = resolveHighlights(flag);
    const words = spans.map(({ start, end }) => flag.post_text.slice(start, end));
    expect(words).toEqual(['hopeless', 'alone']);
  });

  it('is case-insensitive against the original text', () => {
    const flag = stubFlag({
      post_text: 'HOPELESS again, so Hopeless',
      clean_text: 'hopeless again so hopeless',
      highlights: [{ token: 'hopeless', positions: [0, 3], contribution: 1 }],
    });
    const spans = resolveHighlights(flag);
    expect(spans).toHaveLength(2);
    expect(flag.post_text.slice(spans[0]!.start, spans[0]!.end)).toBe('HOPELESS');
  });

  it('matches whole words only', () => {
    const spans = findTokenSpans('the monopole is not alone', 'alone');
    expect(spans).toHaveLength(1);
    expect(spans[0]!.start).toBe(20);
  });

  it('never produces overlapping ranges or ranges out of bounds', () => {
    const flag = stubFlag({
      post_text: 'sad sad sad',
      clean_text: 'sad sad sad',
      highlights: [
        { token: 'sad', positions: [0, 1, 2], contribution: 1 },
        { token: 'sad', positions: [0], contribution: 0.5 },
      ],
    });
    const spans = resolveHighlights(flag);
    for (const span of spans) {
      expect(span.start).toBeGreaterThanOrEqual(0);
      expect(span.end).toBeLessThanOrEqual(flag.post_text.length);
    }
    for (let i = 1; i < spans.length; i++) {
      expect(spans[i]!.start).toBeGreaterThanOrEqual(spans[i - 1]!.end);
    }
    expect(spans).toHaveLength(3);
  });

  it('falls back to token search when positions are absent', () => {
    const flag = stubFlag({
      post_text: 'Visit us NOW, friend!',
      clean_text: 'visit us now friend',
      highlights: [{ token: 'friend', positions: [], contribution: 1 }],
    });
    const spans = resolveHighlights(flag);
    expect(spans).toHaveLength(1);
    expect(flag.post_text.slice(spans[0]!.start, spans[0]!.end)).toBe('friend');
  });

  it('ignores tokens that do not occur in post_text', () => {
    const flag = stubFlag({
      highlights: [{ token: 'zzzmissing', positions: [0], contribution: 1 }],
    });
    expect(resolveHighlights(flag)).toHaveLength(0);
  });
});

describe('renderHighlighted', () => {
  it('wraps highlighted tokens in mark elements', () => {
    const html = renderHighlighted(stubFlag());
    expect(html).toContain('<mark class="hl">hopeless</mark>');
    expect(html).toContain('<mark class="hl">alone</mark>');
  });

  it('escapes the surrounding text', () => {
    const flag = stubFlag({
      post_text: '<script>alert(1)</script> hopeless',
      clean_text: 'script alert 1 script hopeless',
      highlights: [{ token: 'hopeless', positions: [4], contribution: 1 }],
    });
    const html = renderHighlighted(flag);
    expect(html).not.toContain('<script>');
    expect(html).toContain('&lt;script&gt;');
    expect(html).toContain('<mark class="hl">hopeless</mark>');
  });
});
