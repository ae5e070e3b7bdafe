import { ApiClient, ApiError } from './api.js';
import { emptyForm, toRequest, canSubmit, type DecisionFormState } from './form.js';
import type { DecisionAction, Flag } from './types.js';
import {
  renderAlreadyDecided,
  renderErrorBanner,
  renderFlagDetail,
  renderQueue,
} from './views.js';

// The UI holds no authoritative state: every render is driven by API
// payloads, and decision views only change after a 200 response.

const api = new ApiClient('');
const PAGE_LIMIT = 20;

interface UiState {
  offset: number;
  selected: Flag | null;
  form: DecisionFormState | null;
  banner: string;
}

const state: UiState = { offset: 0, selected: null, form: null, banner: '' };

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

async function loadQueue(): Promise<void> {
  const queueEl = el('queue');
  try {
    const response = await api.queue({ order: 'urgency', offset: state.offset, limit: PAGE_LIMIT });
    queueEl.innerHTML = renderQueue(response, { offset: state.offset, limit: PAGE_LIMIT });
  } catch (err) {
    queueEl.innerHTML = renderErrorBanner(
      `Could not load the queue: ${err instanceof Error ? err.message : String(err)}`,
    );
    const retry = queueEl.querySelector('#retry');
    retry?.addEventListener('click', () => void loadQueue());
    return;
  }
  queueEl.querySelectorAll<HTMLElement>('.queue-row').forEach((row) => {
    row.addEventListener('click', () => {
      const id = row.dataset.flagId;
      if (id) void selectFlag(id);
    });
  });
  queueEl.querySelector('#page-prev')?.addEventListener('click', (event) => {
    state.offset = Number((event.currentTarget as HTMLElement).dataset.offset ?? 0);
    void loadQueue();
  });
  queueEl.querySelector('#page-next')?.addEventListener('click', (event) => {
    state.offset = Number((event.currentTarget as HTMLElement).dataset.offset ?? 0);
    void loadQueue();
  });
}

async function selectFlag(id: string): Promise<void> {
  try {
    state.selected = await api.getFlag(id);
    state.form = emptyForm(state.selected.predicted);
    state.banner = '';
  } catch (err) {
    el('detail').innerHTML = renderErrorBanner(
      `Could not load the flag: ${err instanceof Error ? err.message : String(err)}`,
    );
    return;
  }
  renderDetail();
}

function renderDetail(): void {
  const detail = el('detail');
  if (!state.selected || !state.form) {
    detail.innerHTML = '<p class="empty-state">Select a flag from the queue.</p>';
    return;
  }
  detail.innerHTML = state.banner + renderFlagDetail(state.selected, state.form);
  wireForm();
}

function wireForm(): void {
  const form = document.getElementById('decision-form') as HTMLFormElement | null;
  if (!form || !state.form) return;
  form.addEventListener('change', () => {
    if (!state.form) return;
    const data = new FormData(form);
    state.form.action = (data.get('action') as DecisionAction | null) ?? null;
    state.form.newLabel = (data.get('new_label') as string | null) || null;
    state.form.moderatorId = (data.get('moderator_id') as string | null) ?? '';
    state.form.note = (data.get('note') as string | null) ?? '';
    renderDetail();
  });
  form.addEventListener('submit', (event) => {
    event.preventDefault();
    void submitDecision();
  });
}

async function submitDecision(): Promise<void> {
  if (!state.selected || !state.form || !canSubmit(state.form)) return;
  const flagId = state.selected.id;
  try {
    // no optimistic update: the view changes only once the service says 200
    state.selected = await api.submitDecision(flagId, toRequest(state.form));
    state.banner = '';
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      state.selected = await api.getFlag(flagId);
      state.banner = renderAlreadyDecided(state.selected);
    } else {
      // network or validation failure: keep the form so nothing is lost
      state.banner = renderErrorBanner(
        `Decision not recorded: ${err instanceof Error ? err.message : String(err)}`,
      );
      renderDetail();
      return;
    }
  }
  renderDetail();
  void loadQueue();
}

async function boot(): Promise<void> {
  try {
    const health = await api.health();
    el('model-version').textContent = `model ${health.model_version}`;
  } catch {
    el('model-version').textContent = 'service unreachable';
  }
  renderDetail();
  await loadQueue();
}

document.addEventListener('DOMContentLoaded', () => void boot());
