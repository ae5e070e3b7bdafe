import { escapeHtml, renderHighlighted } from './highlight.js';
import { canSubmit, type DecisionFormState } from './form.js';
import { CLASS_LABELS, type Flag, type QueueResponse } from './types.js';

// Rendering is pure string templating so the contract suite can inspect every
// view without a browser. app.ts owns the DOM wiring.

export const MISSING_NARRATIVE_FALLBACK = 'No narrative available for this flag.';

function disclaimerHtml(flag: Flag): string {
  // Rendered verbatim from the API payload; shown with every prediction.
  return `<p class="disclaimer">${escapeHtml(flag.disclaimer)}</p>`;
}

function statusChip(flag: Flag): string {
  return `<span class="chip status-${flag.status}">${escapeHtml(flag.status)}</span>`;
}

function urgencyBadge(flag: Flag): string {
  const cls = flag.urgency === 'urgent' ? 'badge urgent' : 'badge routine';
  return `<span class="${cls}">${escapeHtml(flag.urgency)}</span>`;
}

export function renderQueue(
  response: QueueResponse,
  page: { offset: number; limit: number },
): string {
  if (response.flags.length === 0) {
    return `<div class="queue"><p class="empty-state">No pending flags.</p></div>`;
  }
  const rows = response.flags
    .map((flag) => {
      const preview = flag.post_text.length > 90 ? `${flag.post_text.slice(0, 90)}…` : flag.post_text;
      return `
      <li class="queue-row ${flag.urgency === 'urgent' ? 'row-urgent' : ''}" data-flag-id="${escapeHtml(flag.id)}">
        ${urgencyBadge(flag)}
        <span class="pred">${escapeHtml(flag.predicted)}</span>
        <span class="conf">${flag.confidence.toFixed(3)}</span>
        ${statusChip(flag)}
        ${flag.low_confidence ? '<span class="chip low-confidence">low confidence</span>' : ''}
        <span class="preview">${escapeHtml(preview)}</span>
      </li>`;
    })
    .join('\n');
  const prevDisabled = page.offset <= 0 ? 'disabled' : '';
  const nextDisabled = page.offset + page.limit >= response.total ? 'disabled' : '';
  const first = response.flags[0];
  return `
  <div class="queue">
    <ul class="queue-list">${rows}</ul>
    <div class="pager">
      <button id="page-prev" data-offset="${Math.max(0, page.offset - page.limit)}" ${prevDisabled}>Previous</button>
      <span class="pager-label">${page.offset + 1}-${Math.min(page.offset + page.limit, response.total)} of ${response.total}</span>
      <button id="page-next" data-offset="${page.offset + page.limit}" ${nextDisabled}>Next</button>
    </div>
    ${first ? disclaimerHtml(first) : ''}
  </div>`;
}

export function renderErrorBanner(message: string): string {
  return `
  <div class="banner error">
    <span>${escapeHtml(message)}</span>
    <button id="retry">Retry</button>
  </div>`;
}

export function renderAlreadyDecided(flag: Flag): string {
  return `
  <div class="banner notice">
    <span>This flag was already decided elsewhere (now ${escapeHtml(flag.status)}). The view has been refreshed.</span>
  </div>`;
}

function labelOptions(predicted: string, selected: string | null): string {
  return CLASS_LABELS.map((label) => {
    const attrs = [
      `value="${label}"`,
      label === selected ? 'selected' : '',
      label === predicted ? 'disabled' : '',
    ]
      .filter(Boolean)
      .join(' ');
    return `<option ${attrs}>${label}</option>`;
  }).join('');
}

export function renderDecisionForm(flag: Flag, form: DecisionFormState): string {
  if (flag.status !== 'pending') {
    return `
    <section class="panel moderator-action">
      <h2>Moderator Action</h2>
      <p>Decision recorded: ${statusChip(flag)}</p>
    </section>`;
  }
  const recategorize = form.action === 'recategorize';
  return `
  <section class="panel moderator-action">
    <h2>Moderator Action</h2>
    <form id="decision-form">
      <div class="actions">
        <label><input type="radio" name="action" value="confirm" ${form.action === 'confirm' ? 'checked' : ''}> Confirm</label>
        <label><input type="radio" name="action" value="dismiss" ${form.action === 'dismiss' ? 'checked' : ''}> Dismiss</label>
        <label><input type="radio" name="action" value="recategorize" ${recategorize ? 'checked' : ''}> Re-categorize</label>
      </div>
      <label class="new-label" ${recategorize ? '' : 'hidden'}>
        New label:
        <select name="new_label">
          <option value="" ${form.newLabel ? '' : 'selected'}>choose…</option>
          ${labelOptions(form.predicted, form.newLabel)}
        </select>
      </label>
      <label>Moderator ID: <input name="moderator_id" value="${escapeHtml(form.moderatorId)}" placeholder="required"></label>
      <label>Note: <input name="note" value="${escapeHtml(form.note)}" placeholder="optional"></label>
      <button type="submit" id="submit-decision" ${canSubmit(form) ? '' : 'disabled'}>Submit decision</button>
    </form>
  </section>`;
}

export function renderFlagDetail(flag: Flag, form: DecisionFormState): string {
  const narrative = flag.narrative.trim()
    ? escapeHtml(flag.narrative)
    : escapeHtml(MISSING_NARRATIVE_FALLBACK);
  return `
  <article class="flag-detail" data-flag-id="${escapeHtml(flag.id)}">
    <header>
      ${urgencyBadge(flag)}
      ${statusChip(flag)}
      <span class="created-at">${escapeHtml(flag.created_at)}</span>
    </header>
    <section class="panel post-content">
      <h2>Post Content</h2>
      <p class="post-text">${renderHighlighted(flag)}</p>
    </section>
    <section class="panel ai-analysis">
      <h2>AI Analysis (Screening Aid Only)</h2>
      <p>Predicted: <strong class="predicted">${escapeHtml(flag.predicted)}</strong></p>
      <p>Confidence: <span class="confidence">${flag.confidence.toFixed(3)}</span></p>
      ${flag.low_confidence ? '<p class="chip low-confidence">low confidence</p>' : ''}
      ${disclaimerHtml(flag)}
    </section>
    <section class="panel llm-analysis">
      <h2>LLM Explainability Analysis</h2>
      <p class="narrative">${narrative}</p>
      <p class="narrative-source">source: ${escapeHtml(flag.narrative_source)}</p>
    </section>
    ${renderDecisionForm(flag, form)}
  </article>`;
}
