/** Job polling: repeat GET /jobs/{id} until the job reaches a terminal state. */

import { ApiClient, ApiError } from "./client.js";
import { TERMINAL_STATES, type JobInfo } from "./types.js";

export interface PollOptions {
  intervalMs?: number;
  /** Called with every snapshot, including the terminal one. */
  onUpdate?: (job: JobInfo) => void;
  /** Network failures retry with doubled backoff; this surfaces the banner. */
  onNetworkError?: (error: Error, nextDelayMs: number) => void;
  maxBackoffMs?: number;
}

const sleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

/**
 * Resolves with the terminal snapshot. API errors (e.g. a 404 for an unknown
 * job) reject immediately — only network-level failures are retried.
 */
export async function pollJob(
  client: ApiClient,
  jobId: string,
  options: PollOptions = {},
): Promise<JobInfo> {
  const interval = options.intervalMs ?? 1000;
  const maxBackoff = options.maxBackoffMs ?? 30_000;
  let backoff = interval;

  for (;;) {
    let job: JobInfo;
    try {
      job = await client.getJob(jobId);
      backoff = interval;
    } catch (error) {
      if (error instanceof ApiError) {
        throw error;
      }
      const delay = Math.min(backoff, maxBackoff);
      options.onNetworkError?.(error as Error, delay);
      await sleep(delay);
      backoff = Math.min(backoff * 2, maxBackoff);
      continue;
    }
    options.onUpdate?.(job);
    if (TERMINAL_STATES.has(job.state)) {
      return job;
    }
    await sleep(interval);
  }
}

/** Progress fraction for a progress bar, clamped to [0, 1]. */
export function progressFraction(job: JobInfo): number {
  return Math.min(1, Math.max(0, job.progress));
}
