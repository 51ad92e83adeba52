/** Review worklist derived from a regeneration report.
 *
 * Generated trees run to dozens of pages, so the expert works a queue
 * rather than free-navigating: warned subtrees first, then new branches,
 * then relabeled ones. Deltas are grouped to their topmost path; one
 * renamed mode relabels a whole subtree but yields a single entry. */

import type { RegenReport } from './types.js';

export type WorklistCategory = 'warned' | 'new' | 'relabeled';

export interface WorklistEntry {
  path: string;
  category: WorklistCategory;
}

function topmost(paths: string[]): string[] {
  const sorted = [...paths].sort();
  const out: string[] = [];
  for (const path of sorted) {
    const last = out[out.length - 1];
    if (last !== undefined && path.startsWith(last + '/')) continue;
    out.push(path);
  }
  return out;
}

export function buildWorklist(report: RegenReport): WorklistEntry[] {
  const entries: WorklistEntry[] = [];
  for (const path of topmost(report.warned_paths)) {
    entries.push({ path, category: 'warned' });
  }
  for (const path of topmost(report.added_paths)) {
    entries.push({ path, category: 'new' });
  }
  for (const path of topmost(report.relabeled_paths)) {
    entries.push({ path, category: 'relabeled' });
  }
  return entries;
}
