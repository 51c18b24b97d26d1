/** Wire contracts shared with the arena service. */

/** The five comparison criteria, in display order. */
export const CRITERIA = ["OA", "Inst", "MC", "RC", "CR"] as const;
export type Criterion = (typeof CRITERIA)[number];

/** Question shown for each criterion. */
export const CRITERION_QUESTIONS: Record<Criterion, string> = {
  OA: "Which piece do you prefer overall?",
  Inst: "Which piece renders the prompted instruments better?",
  MC: "Which piece captures the prompted melody better?",
  RC: "Which piece captures the prompted rhythm better?",
  CR: "Which piece is more creative?",
};

/**
 * Answer tokens in Left/Right space, exactly as the server accepts them.
 * Mapping back to the hidden systems happens exclusively server-side.
 */
export const ANSWER_OPTIONS = [
  { token: "L>>R", label: "Left much better" },
  { token: "L>R", label: "Left better" },
  { token: "L=R", label: "Equal" },
  { token: "L<R", label: "Right better" },
  { token: "L<<R", label: "Right much better" },
  { token: "None", label: "None" },
  { token: "NA", label: "Not applicable (NA)" },
] as const;
export type AnswerToken = (typeof ANSWER_OPTIONS)[number]["token"];

/** Blinded match payload from GET /session/{annotator}/next-match. */
export interface MatchView {
  match_id: string;
  prompt_text: string;
  clip_left_url: string;
  clip_right_url: string;
  progress: { done: number; total: number };
}

export interface NextMatchResponse {
  match: MatchView | null;
  done: boolean;
}

export interface AnnotationBody {
  match_id: string;
  annotator_id: string;
  answers: Record<Criterion, AnswerToken>;
}

export type SubmitResult =
  | { kind: "recorded" }
  | { kind: "conflict" }
  | { kind: "error"; message: string };
