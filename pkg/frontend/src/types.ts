/** Wire types mirroring the server's tree, annotation and report schemas. */

export type Decision = 'open' | 'closed' | 'developed';

export interface Annotation {
  decision: Decision;
  comment?: string;
  color?: string;
}

export interface TreeNode {
  path: string;
  kind: string;
  gate: 'or' | 'and' | null;
  label: string;
  provenance: string[];
  status: string[];
  annotation?: Annotation;
  summary?: { node_count: number; last_labels: string[] };
}

export interface TreeDoc {
  format_version: number;
  feared_event: string;
  nodes: TreeNode[];
  edges: [string, string][];
  orphaned_annotations: string[];
}

export interface RegenReport {
  unchanged_paths: string[];
  relabeled_paths: string[];
  added_paths: string[];
  removed_paths: string[];
  warned_paths: string[];
  orphaned_annotations: string[];
}

export const STATUS_FLAGS = [
  'expert_required',
  'disputable',
  'warning_orphaned',
  'new_since_last',
] as const;
