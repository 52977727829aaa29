import { describe, expect, it } from "vitest";

import {
  exportGlossLine,
  hasChoices,
  initGlossReview,
  isUnknown,
  selectCandidate,
} from "../src/gloss.js";
import type { GlossSuggestion } from "../src/types.js";

function suggestion(
  token: string,
  index: number,
  candidates: Array<[string[], number]>,
): GlossSuggestion {
  return {
    token,
    token_index: index,
    covered_span: [index, 1],
    candidates: candidates.map(([gloss, score]) => ({ gloss, score })),
  };
}

const SUGGESTIONS: GlossSuggestion[] = [
  suggestion("ein", 0, [
    [["a"], 0.9],
    [["one"], 0.1],
  ]),
  suggestion("Buch", 1, [
    [["book"], 0.8],
    [["the", "book"], 0.2],
  ]),
  suggestion("zzz", 2, [[["<unk>"], 0.0]]),
];

describe("GlossReviewState", () => {
  it("starts with the top candidate selected everywhere", () => {
    const state = initGlossReview(SUGGESTIONS);
    expect(state.selected).toEqual([0, 0, 0]);
    expect(exportGlossLine(state)).toBe("a book <unk>");
  });

  it("selection updates the exportable line, multi-word glosses included", () => {
    let state = initGlossReview(SUGGESTIONS);
    state = selectCandidate(state, 1, 1);
    expect(exportGlossLine(state)).toBe("a the book <unk>");
    state = selectCandidate(state, 0, 1);
    expect(exportGlossLine(state)).toBe("one the book <unk>");
  });

  it("rejects out-of-bounds selections", () => {
    const state = initGlossReview(SUGGESTIONS);
    expect(() => selectCandidate(state, 1, 5)).toThrow(RangeError);
    expect(() => selectCandidate(state, 9, 0)).toThrow(RangeError);
    expect(() => selectCandidate(state, 2, -1)).toThrow(RangeError);
  });

  it("marks unknown tokens for distinct styling", () => {
    const state = initGlossReview(SUGGESTIONS);
    expect(isUnknown(state, 0)).toBe(false);
    expect(isUnknown(state, 2)).toBe(true);
  });

  it("k=1 responses need no dropdown", () => {
    expect(hasChoices(SUGGESTIONS[0])).toBe(true);
    expect(hasChoices(SUGGESTIONS[2])).toBe(false);
  });

  it("candidates stay in server order", () => {
    const state = initGlossReview(SUGGESTIONS);
    expect(state.suggestions[0].candidates.map((c) => c.gloss.join(" "))).toEqual([
      "a",
      "one",
    ]);
  });
});
