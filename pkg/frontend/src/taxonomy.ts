import type { TaxonomyDoc } from "./types.js";

/** Code -> display helpers over the server-provided hierarchy. */
export class TaxonomyView {
  private names = new Map<string, string>();
  private parents = new Map<string, string>();

  constructor(readonly doc: TaxonomyDoc) {
    for (const top of doc.top) {
      this.names.set(top.code, top.name);
      for (const child of top.children) {
        this.names.set(child.code, child.name);
        this.parents.set(child.code, top.code);
      }
    }
  }

  name(code: string): string {
    return this.names.get(code) ?? code;
  }

  /** "Second name (Top name)" for second-level codes; plain name for tops. */
  describe(code: string): string {
    const parent = this.parents.get(code);
    return parent ? `${this.name(code)} (${this.name(parent)})` : this.name(code);
  }
}

/** Human label for an error-category code ("common_source" -> "Common source"). */
export function categoryLabel(code: string): string {
  const text = code.replaceAll("_", " ");
  return text.charAt(0).toUpperCase() + text.slice(1);
}
