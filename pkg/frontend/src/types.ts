// Mirrors of the /api/v1 JSON payloads. The dashboard never computes any of
// these values itself; everything displayed comes from the service.

export interface Highlight {
  token: string;
  positions: number[];
  contribution: number;
}

export type Urgency = 'urgent' | 'routine';
export type FlagStatus = 'pending' | 'confirmed' | 'dismissed' | 'recategorized';

export interface Flag {
  id: string;
  post_text: string;
  clean_text: string;
  predicted: string;
  confidence: number;
  highlights: Highlight[];
  narrative: string;
  narrative_source: string;
  urgency: Urgency;
  status: FlagStatus;
  low_confidence: boolean;
  created_at: string;
  disclaimer: string;
}

export interface QueueResponse {
  flags: Flag[];
  total: number;
}

export interface ApiErrorBody {
  error: string;
  message: string;
}

export type DecisionAction = 'confirm' | 'dismiss' | 'recategorize';

export interface DecisionRequest {
  action: DecisionAction;
  moderator_id: string;
  new_label?: string;
  note?: string;
}

export const CLASS_LABELS = [
  'age_cb',
  'anxiety',
  'bipolar',
  'ethnicity_cb',
  'gender_cb',
  'non_suicide',
  'personality_disorder',
  'religion_cb',
  'stress',
  'suicide',
] as const;

export type ClassLabel = (typeof CLASS_LABELS)[number];
