import { ApiClient } from "./api.js";
import type { ClassAnnotationView } from "./types.js";

/** Class-annotation flow: pick a second-level class plus a confidence. */
export class AnnotateFlow {
  constructor(
    private api: ApiClient,
    readonly annotator: string,
  ) {}

  /**
   * Submit and then read the annotation back from the server, so the UI
   * always reflects acknowledged state.
   */
  async submit(
    soundId: string,
    classCode: string,
    confidence: string,
  ): Promise<ClassAnnotationView> {
    await this.api.postClassAnnotation({
      sound_id: soundId,
      class_code: classCode,
      confidence,
      annotator: this.annotator,
    });
    const readBack = await this.api.getClassAnnotations(soundId);
    if (!readBack.latest) {
      throw new Error("annotation not visible after acknowledgment");
    }
    return readBack.latest;
  }

  latest(soundId: string): Promise<ClassAnnotationView | null> {
    return this.api.getClassAnnotations(soundId).then((doc) => doc.latest);
  }
}
