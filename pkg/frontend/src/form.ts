import type { DecisionAction, DecisionRequest } from './types.js';

export interface DecisionFormState {
  action: DecisionAction | null;
  newLabel: string | null;
  moderatorId: string;
  note: string;
  predicted: string; // the model's label; recategorize must pick a different one
}

export function emptyForm(predicted: string): DecisionFormState {
  return { action: null, newLabel: null, moderatorId: '', note: '', predicted };
}

/** The submit button stays disabled until the form is actually valid. */
export function canSubmit(form: DecisionFormState): boolean {
  if (!form.action) return false;
  if (!form.moderatorId.trim()) return false;
  if (form.action === 'recategorize') {
    if (!form.newLabel) return false;
    if (form.newLabel === form.predicted) return false;
  }
  return true;
}

export function toRequest(form: DecisionFormState): DecisionRequest {
  if (!canSubmit(form) || !form.action) {
    throw new Error('decision form is not submittable');
  }
  const request: DecisionRequest = {
    action: form.action,
    moderator_id: form.moderatorId.trim(),
  };
  if (form.action === 'recategorize' && form.newLabel) {
    request.new_label = form.newLabel;
  }
  if (form.note.trim()) {
    request.note = form.note.trim();
  }
  return request;
}
