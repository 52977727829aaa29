/**
 * Workspace view state: what the single-page app renders.
 *
 * Job rows only ever hold snapshots returned by the server; the UI never
 * invents or advances a state locally.
 */

import { ApiClient } from "./client.js";
import type { JobInfo, ModelInfo, UploadManifest } from "./types.js";

export type Screen = "upload" | "train" | "transcribe" | "review" | "gloss";

export interface WorkspaceView {
  corpora: UploadManifest[];
  models: ModelInfo[];
  jobs: JobInfo[];
  active: Screen;
}

export function emptyWorkspace(): WorkspaceView {
  return { corpora: [], models: [], jobs: [], active: "upload" };
}

export function setScreen(view: WorkspaceView, screen: Screen): WorkspaceView {
  return { ...view, active: screen };
}

export function addCorpus(view: WorkspaceView, manifest: UploadManifest): WorkspaceView {
  return { ...view, corpora: [manifest, ...view.corpora] };
}

/** Insert or replace a job row with a server snapshot. */
export function upsertJob(view: WorkspaceView, job: JobInfo): WorkspaceView {
  const jobs = view.jobs.some((j) => j.job_id === job.job_id)
    ? view.jobs.map((j) => (j.job_id === job.job_id ? job : j))
    : [job, ...view.jobs];
  return { ...view, jobs };
}

export async function refreshModels(
  view: WorkspaceView,
  client: ApiClient,
): Promise<WorkspaceView> {
  return { ...view, models: await client.listModels() };
}
