import { ApiClient } from "./api.js";
import type { QueueItem } from "./types.js";

const PAGE_SIZE = 100;

/**
 * Error-review state: the queue, a cursor, and optimistic annotation
 * submissions reconciled against server acknowledgments.
 */
export class ReviewFlow {
  items: QueueItem[] = [];
  index = 0;

  constructor(
    private api: ApiClient,
    readonly reviewer: string,
  ) {}

  async load(): Promise<void> {
    const items: QueueItem[] = [];
    let offset = 0;
    for (;;) {
      const page = await this.api.getErrors(offset, PAGE_SIZE);
      items.push(...page.items);
      offset += PAGE_SIZE;
      if (items.length >= page.total || page.items.length === 0) break;
    }
    this.items = items;
    this.index = Math.min(this.index, Math.max(0, items.length - 1));
  }

  get current(): QueueItem | null {
    return this.items[this.index] ?? null;
  }

  next(): void {
    if (this.index < this.items.length - 1) this.index += 1;
  }

  prev(): void {
    if (this.index > 0) this.index -= 1;
  }

  /** {done, total} over the whole queue (optimistic entries count). */
  progress(): { done: number; total: number } {
    const done = this.items.filter((it) => it.annotation !== null).length;
    return { done, total: this.items.length };
  }

  /** Live per-category tally of the current annotation state. */
  tally(categories: string[]): Record<string, number> {
    const counts: Record<string, number> = {};
    for (const category of categories) counts[category] = 0;
    for (const item of this.items) {
      const cat = item.annotation?.category;
      if (cat !== undefined && cat in counts) counts[cat] = (counts[cat] ?? 0) + 1;
    }
    return counts;
  }

  /**
   * Submit a category for the current item. The UI state updates
   * immediately; a rejected submission is rolled back and rethrown.
   */
  async annotate(category: string, note?: string): Promise<void> {
    const item = this.current;
    if (!item) throw new Error("nothing to annotate");
    const previous = item.annotation;
    item.annotation = {
      category,
      reviewer: this.reviewer,
      note: note ?? null,
      revision: -1,
      pending: true,
    };
    try {
      const ack = await this.api.postErrorAnnotation(item.sound_id, {
        category,
        reviewer: this.reviewer,
        ...(note ? { note } : {}),
      });
      item.annotation = {
        category,
        reviewer: this.reviewer,
        note: note ?? null,
        revision: ack.revision,
      };
    } catch (err) {
      item.annotation = previous;
      throw err;
    }
  }
}
