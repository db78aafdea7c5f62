import { describe, expect, it } from "vitest";

import { mapReviewKey } from "../src/keyboard.js";

describe("mapReviewKey", () => {
  it("maps digits to category indices", () => {
    expect(mapReviewKey("1", 8)).toEqual({ type: "category", index: 0 });
    expect(mapReviewKey("8", 8)).toEqual({ type: "category", index: 7 });
  });

  it("ignores digits beyond the category count", () => {
    expect(mapReviewKey("9", 8)).toBeNull();
    expect(mapReviewKey("4", 3)).toBeNull();
  });

  it("maps playback and navigation keys", () => {
    expect(mapReviewKey(" ", 8)).toEqual({ type: "play" });
    expect(mapReviewKey("ArrowRight", 8)).toEqual({ type: "next" });
    expect(mapReviewKey("j", 8)).toEqual({ type: "next" });
    expect(mapReviewKey("ArrowLeft", 8)).toEqual({ type: "prev" });
    expect(mapReviewKey("k", 8)).toEqual({ type: "prev" });
    expect(mapReviewKey("n", 8)).toEqual({ type: "note" });
  });

  it("ignores unmapped keys", () => {
    expect(mapReviewKey("x", 8)).toBeNull();
    expect(mapReviewKey("Escape", 8)).toBeNull();
  });
});
