/** Wire types mirroring the backend's JSON bodies exactly. */

export type JobState = "QUEUED" | "RUNNING" | "SUCCEEDED" | "FAILED" | "CANCELLED";

export const TERMINAL_STATES: ReadonlySet<JobState> = new Set([
  "SUCCEEDED",
  "FAILED",
  "CANCELLED",
]);

export interface JobInfo {
  job_id: string;
  kind: "transcription" | "gloss";
  state: JobState;
  progress: number;
  result_model_id: string | null;
  error_message: string | null;
  corpus_id: string;
  parent_model_id: string | null;
  config: Record<string, unknown>;
  timestamps: Record<string, string>;
}

export interface JobSpec {
  kind: "transcription" | "gloss";
  corpus_id: string;
  config?: Record<string, unknown>;
  parent_model_id?: string | null;
}

export interface ModelInfo {
  model_id: string;
  kind: "transcription" | "gloss";
  created_at: string;
  parent_id: string | null;
  artifact_path: string;
  checksum: string;
  metadata: Record<string, unknown>;
}

export interface UploadManifest {
  corpus_id: string;
  kind: "speech" | "parallel";
  item_count: number;
  warnings: string[];
}

export interface TranscriptionItem {
  transcription_id: string;
  utterance_id: string;
  phonemes: string;
}

/** Body of PUT /transcriptions/{id}; field names are the API contract. */
export interface CorrectionPayload {
  text: string;
  consent: boolean;
  accepted: boolean;
}

export interface GlossCandidate {
  gloss: string[];
  score: number;
}

export interface GlossSuggestion {
  token: string;
  token_index: number;
  covered_span: [number, number];
  candidates: GlossCandidate[];
}

export interface ApiErrorBody {
  code: string;
  message: string;
}
