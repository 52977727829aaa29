/**
 * Gloss review: one column per source token, candidates in server order,
 * a selection per token, and an exportable gloss line built from the
 * selections.
 */

import type { GlossSuggestion } from "./types.js";

export const UNKNOWN_GLOSS = "<unk>";

export interface GlossReviewState {
  suggestions: GlossSuggestion[];
  /** Selected candidate index per suggestion; always within bounds. */
  selected: number[];
}

export function initGlossReview(suggestions: GlossSuggestion[]): GlossReviewState {
  return { suggestions, selected: suggestions.map(() => 0) };
}

export function selectCandidate(
  state: GlossReviewState,
  suggestionIndex: number,
  candidateIndex: number,
): GlossReviewState {
  const suggestion = state.suggestions[suggestionIndex];
  if (suggestion === undefined) {
    throw new RangeError(`no suggestion at index ${suggestionIndex}`);
  }
  if (candidateIndex < 0 || candidateIndex >= suggestion.candidates.length) {
    throw new RangeError(
      `candidate ${candidateIndex} out of range for token ${suggestion.token}`,
    );
  }
  const selected = [...state.selected];
  selected[suggestionIndex] = candidateIndex;
  return { ...state, selected };
}

export function selectedGloss(state: GlossReviewState, index: number): string {
  const candidate = state.suggestions[index].candidates[state.selected[index]];
  return candidate.gloss.join(" ");
}

/** Space-joined gloss line matching the current selections. */
export function exportGlossLine(state: GlossReviewState): string {
  return state.suggestions.map((_, i) => selectedGloss(state, i)).join(" ");
}

/** Unknown tokens get a distinct style in the table. */
export function isUnknown(state: GlossReviewState, index: number): boolean {
  const candidate = state.suggestions[index].candidates[state.selected[index]];
  return candidate.gloss.length === 1 && candidate.gloss[0] === UNKNOWN_GLOSS;
}

/** A single fixed gloss (k=1 responses) needs no dropdown. */
export function hasChoices(suggestion: GlossSuggestion): boolean {
  return suggestion.candidates.length > 1;
}
