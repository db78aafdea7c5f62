import { ApiClient, ApiError, OfflineError } from "./api.js";
import { AnnotateFlow } from "./annotate.js";
import { mapReviewKey } from "./keyboard.js";
import { ReviewFlow } from "./review.js";
import { TaxonomyView, categoryLabel } from "./taxonomy.js";
import type { QueueItem, TaxonomyDoc } from "./types.js";

const TEMPLATE = `
<header>
  <h1>Sound review</h1>
  <nav>
    <button id="mode-review" class="mode active">Review errors</button>
    <button id="mode-annotate" class="mode">Annotate class</button>
  </nav>
  <span id="progress" aria-live="polite"></span>
</header>
<div id="offline-banner" hidden>
  Server unreachable. <button id="retry">Retry</button>
</div>
<main id="review-pane">
  <section class="card">
    <h2 id="item-id"></h2>
    <p class="labels">
      true <b id="true-class"></b> &middot; predicted <b id="pred-class"></b>
    </p>
    <audio id="player" controls preload="none"></audio>
    <div id="categories" role="listbox"></div>
    <label class="note-row">note <input id="note" placeholder="optional (n)"></label>
    <p id="item-status" aria-live="polite"></p>
    <div class="nav-row">
      <button id="prev">&larr; prev (k)</button>
      <button id="next">next (j) &rarr;</button>
    </div>
  </section>
  <aside id="tally" class="card"></aside>
</main>
<main id="annotate-pane" hidden>
  <section class="card">
    <h2 id="ann-id"></h2>
    <p id="ann-title"></p>
    <p id="ann-tags" class="tags"></p>
    <audio id="ann-player" controls preload="none"></audio>
    <label class="picker-row">class
      <select id="class-picker"></select>
    </label>
    <fieldset id="confidence"><legend>confidence</legend></fieldset>
    <button id="submit-annotation">Submit</button>
    <p id="ann-status" aria-live="polite"></p>
  </section>
</main>
`;

export interface AppOptions {
  root: HTMLElement;
  baseUrl: string;
  reviewer?: string;
}

export class App {
  readonly api: ApiClient;
  readonly review: ReviewFlow;
  readonly annotate: AnnotateFlow;
  taxonomy!: TaxonomyView;
  mode: "review" | "annotate" = "review";
  private root: HTMLElement;
  private chain: Promise<void> = Promise.resolve();

  constructor(options: AppOptions) {
    this.root = options.root;
    this.api = new ApiClient(options.baseUrl);
    const reviewer = options.reviewer ?? "reviewer";
    this.review = new ReviewFlow(this.api, reviewer);
    this.annotate = new AnnotateFlow(this.api, reviewer);
  }

  /** Serialized async actions; tests await this to observe settled state. */
  whenIdle(): Promise<void> {
    return this.chain;
  }

  private enqueue(action: () => Promise<void>): Promise<void> {
    this.chain = this.chain.then(action, action);
    return this.chain;
  }

  private el<T extends HTMLElement>(id: string): T {
    const node = this.root.querySelector(`#${id}`);
    if (!node) throw new Error(`missing element #${id}`);
    return node as T;
  }

  async start(): Promise<void> {
    this.root.innerHTML = TEMPLATE;
    this.el("retry").addEventListener("click", () => void this.enqueue(() => this.bootstrap()));
    this.el("mode-review").addEventListener("click", () => this.setMode("review"));
    this.el("mode-annotate").addEventListener("click", () => this.setMode("annotate"));
    this.el("next").addEventListener("click", () => {
      this.review.next();
      this.renderItem();
    });
    this.el("prev").addEventListener("click", () => {
      this.review.prev();
      this.renderItem();
    });
    this.el("submit-annotation").addEventListener("click", () =>
      void this.enqueue(() => this.submitClassAnnotation()),
    );
    this.root.ownerDocument.addEventListener("keydown", (event) =>
      this.onKeydown(event as KeyboardEvent),
    );
    await this.bootstrap();
  }

  private async bootstrap(): Promise<void> {
    try {
      const doc: TaxonomyDoc = await this.api.getTaxonomy();
      this.taxonomy = new TaxonomyView(doc);
      await this.review.load();
      this.el("offline-banner").hidden = true;
      this.renderCategories();
      this.renderClassPicker();
      this.renderConfidence();
      this.renderItem();
    } catch (err) {
      if (err instanceof OfflineError) {
        this.el("offline-banner").hidden = false;
        return;
      }
      throw err;
    }
  }

  setMode(mode: "review" | "annotate"): void {
    this.mode = mode;
    this.el("review-pane").hidden = mode !== "review";
    this.el("annotate-pane").hidden = mode !== "annotate";
    this.el("mode-review").classList.toggle("active", mode === "review");
    this.el("mode-annotate").classList.toggle("active", mode === "annotate");
    this.renderItem();
  }

  // ---- rendering -----------------------------------------------------------

  private renderCategories(): void {
    const container = this.el("categories");
    container.innerHTML = "";
    this.taxonomy.doc.error_categories.forEach((code, i) => {
      const button = this.root.ownerDocument.createElement("button");
      button.className = "category";
      button.dataset.category = code;
      button.textContent = `${i + 1}. ${categoryLabel(code)}`;
      button.addEventListener("click", () =>
        void this.enqueue(() => this.submitCategory(code)),
      );
      container.appendChild(button);
    });
  }

  private renderClassPicker(): void {
    const picker = this.el<HTMLSelectElement>("class-picker");
    picker.innerHTML = "";
    for (const top of this.taxonomy.doc.top) {
      const group = this.root.ownerDocument.createElement("optgroup");
      group.label = top.name;
      for (const child of top.children) {
        const option = this.root.ownerDocument.createElement("option");
        option.value = child.code;
        option.textContent = child.name;
        group.appendChild(option);
      }
      picker.appendChild(group);
    }
  }

  private renderConfidence(): void {
    const fieldset = this.el("confidence");
    for (const level of this.taxonomy.doc.confidence_levels) {
      const label = this.root.ownerDocument.createElement("label");
      const radio = this.root.ownerDocument.createElement("input");
      radio.type = "radio";
      radio.name = "confidence";
      radio.value = level;
      if (level === this.taxonomy.doc.confidence_levels[0]) radio.checked = true;
      label.appendChild(radio);
      label.appendChild(this.root.ownerDocument.createTextNode(level));
      fieldset.appendChild(label);
    }
  }

  private renderItem(): void {
    const item = this.review.current;
    const progress = this.review.progress();
    this.el("progress").textContent =
      progress.total === 0 ? "nothing to review" : `${progress.done}/${progress.total}`;
    this.renderTally();
    if (!item) {
      this.el("item-id").textContent = "Nothing to review";
      this.el("true-class").textContent = "";
      this.el("pred-class").textContent = "";
      this.el("item-status").textContent = "";
      return;
    }
    this.el("item-id").textContent =
      `${item.sound_id} (${this.review.index + 1} of ${this.review.items.length})`;
    this.el("true-class").textContent = this.taxonomy.describe(item.true_code);
    this.el("pred-class").textContent = this.taxonomy.describe(item.predicted_code);
    const player = this.el<HTMLAudioElement>("player");
    player.src = item.audio_path ? this.api.audioUrl(item.sound_id) : "";
    this.el("item-status").textContent = item.annotation
      ? `annotated: ${categoryLabel(item.annotation.category)}` +
        (item.annotation.pending ? " (saving...)" : "")
      : "not annotated";
    for (const button of this.root.querySelectorAll<HTMLElement>(".category")) {
      button.classList.toggle(
        "selected",
        item.annotation?.category === button.dataset.category,
      );
    }
    // annotate pane mirrors the current queue item
    this.el("ann-id").textContent = item.sound_id;
    this.el("ann-title").textContent = (item as QueueItem & { title?: string }).title ?? "";
    const tags = (item as QueueItem & { tags?: string[] }).tags;
    this.el("ann-tags").textContent = tags && tags.length ? `tags: ${tags.join(", ")}` : "";
    this.el<HTMLAudioElement>("ann-player").src = item.audio_path
      ? this.api.audioUrl(item.sound_id)
      : "";
  }

  private renderTally(): void {
    const container = this.el("tally");
    if (!this.taxonomy) return;
    const counts = this.review.tally(this.taxonomy.doc.error_categories);
    container.innerHTML = "<h3>Tally</h3>";
    for (const [code, count] of Object.entries(counts)) {
      const row = this.root.ownerDocument.createElement("div");
      row.className = "tally-row";
      row.textContent = `${categoryLabel(code)}: ${count}`;
      container.appendChild(row);
    }
  }

  // ---- actions -------------------------------------------------------------

  private async submitCategory(category: string): Promise<void> {
    const note = this.el<HTMLInputElement>("note").value.trim() || undefined;
    try {
      const submitted = this.review.annotate(category, note);
      this.renderItem(); // optimistic state is visible immediately
      await submitted;
      this.el<HTMLInputElement>("note").value = "";
      this.review.next();
    } catch (err) {
      if (err instanceof OfflineError) {
        this.el("offline-banner").hidden = false;
      } else if (err instanceof ApiError) {
        this.el("item-status").textContent = `rejected: ${err.message}`;
        return; // keep the reverted state visible
      } else {
        throw err;
      }
    }
    this.renderItem();
  }

  private async submitClassAnnotation(): Promise<void> {
    const item = this.review.current;
    if (!item) return;
    const picker = this.el<HTMLSelectElement>("class-picker");
    const checked = this.root.querySelector<HTMLInputElement>(
      "#confidence input:checked",
    );
    try {
      const latest = await this.annotate.submit(
        item.sound_id,
        picker.value,
        checked?.value ?? "",
      );
      this.el("ann-status").textContent =
        `saved: ${this.taxonomy.describe(latest.class_code)} (${latest.confidence})`;
    } catch (err) {
      if (err instanceof OfflineError) {
        this.el("offline-banner").hidden = false;
      } else if (err instanceof ApiError) {
        this.el("ann-status").textContent = `rejected: ${err.message}`;
      } else {
        throw err;
      }
    }
  }

  private onKeydown(event: KeyboardEvent): void {
    const target = event.target as HTMLElement | null;
    if (target && ["INPUT", "TEXTAREA", "SELECT"].includes(target.tagName)) return;
    if (this.mode !== "review" || !this.taxonomy) return;
    const action = mapReviewKey(event.key, this.taxonomy.doc.error_categories.length);
    if (!action) return;
    event.preventDefault();
    switch (action.type) {
      case "category": {
        const code = this.taxonomy.doc.error_categories[action.index];
        if (code) void this.enqueue(() => this.submitCategory(code));
        break;
      }
      case "play": {
        const player = this.el<HTMLAudioElement>("player");
        if (player.paused) void player.play?.()?.catch?.(() => undefined);
        else player.pause?.();
        break;
      }
      case "next":
        this.review.next();
        this.renderItem();
        break;
      case "prev":
        this.review.prev();
        this.renderItem();
        break;
      case "note":
        this.el<HTMLInputElement>("note").focus();
        break;
    }
  }
}

export async function startApp(options: AppOptions): Promise<App> {
  const app = new App(options);
  await app.start();
  return app;
}
