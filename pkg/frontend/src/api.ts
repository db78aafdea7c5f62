import type {
  ClassAnnotationView,
  ErrorReport,
  ErrorsPage,
  TaxonomyDoc,
} from "./types.js";

/** Server rejected a request (4xx/5xx with an error body). */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

/** Network-level failure: server unreachable. */
export class OfflineError extends Error {
  constructor() {
    super("review service unreachable");
  }
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await fetch(this.baseUrl + path, init);
    } catch {
      throw new OfflineError();
    }
    let body: unknown = null;
    try {
      body = await response.json();
    } catch {
      // non-JSON body; fall through to the status check
    }
    if (!response.ok) {
      const message =
        body && typeof body === "object" && "error" in body
          ? String((body as { error: unknown }).error)
          : `request failed with status ${response.status}`;
      throw new ApiError(response.status, message);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  getTaxonomy(): Promise<TaxonomyDoc> {
    return this.request("/taxonomy");
  }

  getErrors(offset: number, limit: number): Promise<ErrorsPage> {
    return this.request(`/errors?offset=${offset}&limit=${limit}`);
  }

  postErrorAnnotation(
    soundId: string,
    payload: { category: string; reviewer: string; note?: string },
  ): Promise<{ revision: number }> {
    return this.post(`/errors/${encodeURIComponent(soundId)}/annotation`, payload);
  }

  getReport(): Promise<ErrorReport> {
    return this.request("/report/errors");
  }

  postClassAnnotation(payload: {
    sound_id: string;
    class_code: string;
    confidence: string;
    annotator: string;
  }): Promise<{ revision: number }> {
    return this.post("/annotations", payload);
  }

  getClassAnnotations(soundId: string): Promise<{
    sound_id: string;
    latest: ClassAnnotationView | null;
    annotations: ClassAnnotationView[];
  }> {
    return this.request(`/annotations/${encodeURIComponent(soundId)}`);
  }

  audioUrl(soundId: string): string {
    return `${this.baseUrl}/audio/${encodeURIComponent(soundId)}`;
  }
}
