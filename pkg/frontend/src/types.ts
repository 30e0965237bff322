/** Wire types mirroring the server's JSON formats (docs/formats.md, format_version 1). */

export type SpanPayload = { kind: 'span'; start: number; end: number; tag: string };
export type ClassPayload = { kind: 'class'; class_id: string };
export type RelationNodeKey = ['ideal', string] | ['nt', string, string];
export type RelationEdge = { parent: RelationNodeKey; child: RelationNodeKey; label: string };
export type RelationPayload = { kind: 'relation'; edges: RelationEdge[] };
export type Payload = SpanPayload | ClassPayload | RelationPayload;

export interface EntityTag {
  id: string;
  name: string;
  color: string | null;
}

export interface Schema {
  id: string;
  name: string;
  entity_tags: EntityTag[];
  classes: string[];
  classification_mode: 'single-label' | 'multi-label';
  relation_types: string[];
  allows_nonterminals: boolean;
}

export interface ExampleView {
  id: string;
  content: string;
  metadata: Record<string, string | number | boolean>;
}

export interface TaskView {
  id: string;
  job_id: string;
  annotator_id: string;
  example_id: string;
  state: 'pending' | 'leased' | 'submitted';
}

export interface PreAnnotationView {
  id: string;
  ideal_id: string;
  origin: string;
  state: 'pending' | 'accepted' | 'rejected';
  payload: Payload;
}

export interface LeasedTask {
  task: TaskView | null;
  example?: ExampleView;
  schema_id?: string;
  dataset_id?: string;
  preannotations?: PreAnnotationView[];
}

export interface SearchHit {
  example_id: string;
  spans: [number, number][];
  content: string;
}

export interface SearchResponse {
  format_version: number;
  total: number;
  examined: number;
  results: SearchHit[];
}

export interface ReviewGroup {
  ideal_id: string;
  payload: Payload;
  event_count: number;
  annotator_ids: string[];
  judgment: { verdict: 'accepted' | 'rejected'; cause: string } | null;
}

export interface ConsolidatedView {
  example_id: string;
  content: string;
  seen: number;
  groups: ReviewGroup[];
  conflicts: [string, string][];
}

export interface LexicalGroupView {
  surface: string;
  tag: string;
  ideal_ids: string[];
  event_count: number;
  pending_ideal_ids: string[];
}

export interface ContextGroupEntry {
  id: string;
  content: string;
  metadata: Record<string, string | number | boolean>;
  editable: boolean;
}
