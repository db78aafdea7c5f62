export interface ClassEntry {
  code: string;
  name: string;
}

export interface TopClass extends ClassEntry {
  children: ClassEntry[];
}

export interface TaxonomyDoc {
  version: string;
  top: TopClass[];
  error_categories: string[];
  confidence_levels: string[];
}

export interface ErrorAnnotationView {
  category: string;
  reviewer: string;
  note: string | null;
  revision: number;
  pending?: boolean;
}

export interface QueueItem {
  sound_id: string;
  true_code: string;
  predicted_code: string;
  audio_path: string | null;
  annotation: ErrorAnnotationView | null;
}

export interface ErrorsPage {
  total: number;
  offset: number;
  limit: number;
  items: QueueItem[];
}

export interface ErrorReport {
  total: number;
  categories: Record<string, number>;
  per_reviewer: Record<string, Record<string, number>>;
}

export interface ClassAnnotationView {
  class_code: string;
  confidence: string;
  annotator: string;
  revision: number;
}
