export type ReviewKeyAction =
  | { type: "category"; index: number }
  | { type: "play" }
  | { type: "next" }
  | { type: "prev" }
  | { type: "note" };

/**
 * Keyboard-first review: digits pick (and submit) a category, space plays
 * audio, arrows step the queue, "n" jumps to the note field.
 */
export function mapReviewKey(
  key: string,
  categoryCount: number,
): ReviewKeyAction | null {
  if (/^[1-9]$/.test(key)) {
    const index = Number(key) - 1;
    return index < categoryCount ? { type: "category", index } : null;
  }
  switch (key) {
    case " ":
      return { type: "play" };
    case "ArrowRight":
    case "j":
      return { type: "next" };
    case "ArrowLeft":
    case "k":
      return { type: "prev" };
    case "n":
      return { type: "note" };
    default:
      return null;
  }
}
