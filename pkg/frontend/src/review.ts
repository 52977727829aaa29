/**
 * Transcription review: the linguist inspects each proposed transcription
 * and either accepts it as-is or edits it, with a consent checkbox deciding
 * whether the result may be kept as fine-tuning data.
 */

import { ApiClient, ApiError } from "./client.js";
import type { CorrectionPayload, TranscriptionItem } from "./types.js";

export interface TranscriptEditState {
  transcriptionId: string;
  utteranceId: string;
  proposed: string;
  edited: string;
  consent: boolean;
  reviewed: boolean;
  error: string | null;
}

export function editStateFrom(item: TranscriptionItem): TranscriptEditState {
  return {
    transcriptionId: item.transcription_id,
    utteranceId: item.utterance_id,
    proposed: item.phonemes,
    edited: item.phonemes,
    consent: false,
    reviewed: false,
    error: null,
  };
}

export function isDirty(state: TranscriptEditState): boolean {
  return state.edited !== state.proposed;
}

/** Submit is enabled for an edit, or for an explicit accept of the proposal. */
export function canSubmit(state: TranscriptEditState, explicitAccept: boolean): boolean {
  return isDirty(state) || explicitAccept;
}

/** The exact PUT body: accepted=true only for an unchanged proposal. */
export function correctionPayload(
  state: TranscriptEditState,
  explicitAccept: boolean,
): CorrectionPayload {
  return {
    text: state.edited,
    consent: state.consent,
    accepted: explicitAccept && !isDirty(state),
  };
}

/**
 * PUT the review. On success the row is marked reviewed and the proposal
 * becomes the edited text (clearing the dirty flag). A validation error
 * from the server keeps the user's edit and surfaces the message inline.
 */
export async function submitCorrection(
  client: ApiClient,
  state: TranscriptEditState,
  explicitAccept = false,
): Promise<TranscriptEditState> {
  if (!canSubmit(state, explicitAccept)) {
    return state;
  }
  try {
    await client.putCorrection(
      state.transcriptionId,
      correctionPayload(state, explicitAccept),
    );
  } catch (error) {
    if (error instanceof ApiError && error.code === "VALIDATION") {
      return { ...state, error: error.message };
    }
    throw error;
  }
  return {
    ...state,
    proposed: state.edited,
    reviewed: true,
    error: null,
  };
}
