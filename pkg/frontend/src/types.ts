// Payload shapes of the /api endpoints this client consumes.

export interface PairAssignment {
  a_id: string;
  b_id: string;
  a_components: Record<string, string>;
  b_components: Record<string, string>;
  score: number;
}

export interface MatchResult {
  b_id: string;
  score: number;
}

export interface DocumentOut {
  id: string;
  doctype: string;
  components: Record<string, string>;
}

export interface DocumentSummary {
  id: string;
  doctype: string;
  preview: string;
}

export type Rating = 0 | 1;

export interface LabelSubmission {
  judge: string;
  a_id: string;
  b_id: string;
  rating: Rating;
}
