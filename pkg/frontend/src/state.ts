/** Pure view-state over a fetched tree document: indexing, expansion,
 * status filtering and optimistic annotation edits with rollback.
 *
 * The displayed node set is always derived from the server-provided node
 * list; nothing is invented client-side. */

import { ApiError } from './api.js';
import type { Annotation, TreeDoc, TreeNode } from './types.js';

export interface TreeIndex {
  root: string;
  byPath: Map<string, TreeNode>;
  children: Map<string, string[]>;
  parents: Map<string, string[]>;
}

export function indexTree(doc: TreeDoc): TreeIndex {
  const byPath = new Map<string, TreeNode>();
  const children = new Map<string, string[]>();
  const parents = new Map<string, string[]>();
  for (const node of doc.nodes) {
    byPath.set(node.path, node);
    children.set(node.path, []);
    parents.set(node.path, []);
  }
  for (const [parent, child] of doc.edges) {
    children.get(parent)?.push(child);
    parents.get(child)?.push(parent);
  }
  return { root: doc.nodes[0].path, byPath, children, parents };
}

export interface ViewState {
  expanded: Set<string>;
  filter: Set<string>;
  selected: string | null;
  annotations: Map<string, Annotation>;
  retryPrompt: string | null;
  error: string | null;
}

export function initialState(doc: TreeDoc, index: TreeIndex): ViewState {
  const annotations = new Map<string, Annotation>();
  for (const node of doc.nodes) {
    if (node.annotation) annotations.set(node.path, node.annotation);
  }
  return {
    expanded: new Set([index.root]),
    filter: new Set(),
    selected: null,
    annotations,
    retryPrompt: null,
    error: null,
  };
}

export function toggleExpanded(state: ViewState, path: string): void {
  if (state.expanded.has(path)) state.expanded.delete(path);
  else state.expanded.add(path);
}

export function expandAll(state: ViewState, index: TreeIndex): void {
  for (const path of index.byPath.keys()) state.expanded.add(path);
}

/** Paths whose subtree (self included) carries at least one of the
 * filtered status flags. An empty filter keeps every node. */
export function filterVisibleSet(index: TreeIndex, filter: Set<string>): Set<string> {
  if (filter.size === 0) return new Set(index.byPath.keys());
  const visible = new Set<string>();
  const matches = (path: string): boolean => {
    const node = index.byPath.get(path);
    return node !== undefined && node.status.some((s) => filter.has(s));
  };
  const walk = (path: string): boolean => {
    let keep = matches(path);
    for (const child of index.children.get(path) ?? []) {
      if (walk(child)) keep = true;
    }
    if (keep) visible.add(path);
    return keep;
  };
  walk(index.root);
  return visible;
}

export interface VisibleRow {
  path: string;
  depth: number;
  /** true when this row repeats a shared node already rendered above */
  sharedRef: boolean;
  hasChildren: boolean;
  expanded: boolean;
}

/** Pre-order rows of the expanded, filtered view. Shared nodes render in
 * full once; later occurrences become reference rows. */
export function visibleRows(index: TreeIndex, state: ViewState): VisibleRow[] {
  const allowed = filterVisibleSet(index, state.filter);
  const rows: VisibleRow[] = [];
  const renderedOnce = new Set<string>();
  const walk = (path: string, depth: number) => {
    if (!allowed.has(path)) return;
    const sharedRef = renderedOnce.has(path);
    const childPaths = (index.children.get(path) ?? []).filter((c) => allowed.has(c));
    rows.push({
      path,
      depth,
      sharedRef,
      hasChildren: childPaths.length > 0,
      expanded: state.expanded.has(path),
    });
    if (sharedRef) return;
    renderedOnce.add(path);
    if (!state.expanded.has(path)) return;
    for (const child of index.children.get(path) ?? []) walk(child, depth + 1);
  };
  walk(index.root, 0);
  return rows;
}

export function isShared(index: TreeIndex, path: string): boolean {
  return (index.parents.get(path)?.length ?? 0) > 1;
}

export interface SubmitOutcome {
  ok: boolean;
  status?: number;
  retry: boolean;
}

interface AnnotationWriter {
  putAnnotation(path: string, annotation: Annotation): Promise<void>;
}

/** Optimistic decision submission: apply locally, PUT, roll back on 4xx.
 * A 409 (write in flight) additionally raises the retry prompt. */
export async function submitDecision(
  api: AnnotationWriter,
  state: ViewState,
  path: string,
  annotation: Annotation,
): Promise<SubmitOutcome> {
  const previous = state.annotations.get(path);
  state.annotations.set(path, annotation);
  if (annotation.decision === 'closed') state.expanded.delete(path);
  state.retryPrompt = null;
  state.error = null;
  try {
    await api.putAnnotation(path, annotation);
    return { ok: true, retry: false };
  } catch (err) {
    if (previous === undefined) state.annotations.delete(path);
    else state.annotations.set(path, previous);
    const status = err instanceof ApiError ? err.status : undefined;
    if (status === 409) {
      state.retryPrompt = path;
      return { ok: false, status, retry: true };
    }
    state.error = err instanceof Error ? err.message : String(err);
    return { ok: false, status, retry: false };
  }
}
