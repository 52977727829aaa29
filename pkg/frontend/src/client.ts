/**
 * Typed client for the annotation backend.
 *
 * The fetch implementation is injectable so tests can run against an
 * in-memory mock server; the UI performs no linguistic computation of its
 * own — everything shown comes verbatim from these responses.
 */

import type {
  ApiErrorBody,
  GlossSuggestion,
  JobInfo,
  JobSpec,
  ModelInfo,
  TranscriptionItem,
  UploadManifest,
  CorrectionPayload,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) {
      let body: ApiErrorBody = { code: "INTERNAL", message: response.statusText };
      try {
        body = (await response.json()) as ApiErrorBody;
      } catch {
        // non-JSON error body: keep the status text
      }
      throw new ApiError(response.status, body.code, body.message);
    }
    return (await response.json()) as T;
  }

  private json<T>(path: string, method: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method,
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  health(): Promise<{ status: string }> {
    return this.request("/healthz");
  }

  uploadCorpus(zipBytes: BodyInit): Promise<UploadManifest> {
    return this.request("/corpora", {
      method: "POST",
      headers: { "content-type": "application/zip" },
      body: zipBytes,
    });
  }

  getCorpus(corpusId: string): Promise<UploadManifest> {
    return this.request(`/corpora/${corpusId}`);
  }

  submitJob(spec: JobSpec): Promise<JobInfo> {
    return this.json("/jobs", "POST", spec);
  }

  getJob(jobId: string): Promise<JobInfo> {
    return this.request(`/jobs/${jobId}`);
  }

  cancelJob(jobId: string): Promise<JobInfo> {
    return this.request(`/jobs/${jobId}`, { method: "DELETE" });
  }

  async listModels(): Promise<ModelInfo[]> {
    const body = await this.request<{ models: ModelInfo[] }>("/models");
    return body.models;
  }

  getModel(modelId: string): Promise<ModelInfo> {
    return this.request(`/models/${modelId}`);
  }

  async transcribe(modelId: string, wav: BodyInit): Promise<TranscriptionItem[]> {
    const body = await this.request<{ transcriptions: TranscriptionItem[] }>(
      `/models/${modelId}/transcriptions`,
      { method: "POST", headers: { "content-type": "audio/wav" }, body: wav },
    );
    return body.transcriptions;
  }

  putCorrection(
    transcriptionId: string,
    payload: CorrectionPayload,
  ): Promise<{ transcription_id: string; stored: boolean }> {
    return this.json(`/transcriptions/${transcriptionId}`, "PUT", payload);
  }

  async gloss(
    modelId: string,
    sentences: string[],
    k = 5,
  ): Promise<GlossSuggestion[][]> {
    const body = await this.request<{ results: GlossSuggestion[][] }>(
      `/models/${modelId}/glosses`,
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ sentences, k }),
      },
    );
    return body.results;
  }
}
