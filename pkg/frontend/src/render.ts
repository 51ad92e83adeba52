/** DOM rendering: collapsible layered DAG, status colours, shared-node
 * markers, the decision panel and the review worklist. Labels are shown
 * full-length and wrap in CSS; the tree is display only. */

import type { ApiClient } from './api.js';
import {
  ViewState,
  TreeIndex,
  isShared,
  submitDecision,
  toggleExpanded,
  visibleRows,
} from './state.js';
import type { Decision, RegenReport, TreeDoc } from './types.js';
import { buildWorklist } from './worklist.js';
import { STATUS_FLAGS } from './types.js';

export interface App {
  api: ApiClient;
  fearedEvent: string;
  doc: TreeDoc;
  index: TreeIndex;
  state: ViewState;
  report: RegenReport | null;
  refresh: () => Promise<void>;
}

export function render(app: App, rootEl: HTMLElement): void {
  rootEl.replaceChildren(
    renderToolbar(app),
    renderBanner(app),
    renderColumns(app),
  );
}

function renderToolbar(app: App): HTMLElement {
  const bar = el('div', 'toolbar');
  const title = el('span', 'title');
  title.textContent = app.doc.nodes[0]?.label ?? app.fearedEvent;
  bar.append(title);

  for (const flag of STATUS_FLAGS) {
    const label = el('label', 'filter-toggle') as HTMLLabelElement;
    const box = document.createElement('input');
    box.type = 'checkbox';
    box.checked = app.state.filter.has(flag);
    box.addEventListener('change', () => {
      if (box.checked) app.state.filter.add(flag);
      else app.state.filter.delete(flag);
      rerender(app);
    });
    label.append(box, document.createTextNode(flag));
    bar.append(label);
  }

  const regen = el('button', 'regen') as HTMLButtonElement;
  regen.textContent = 'Regenerate';
  regen.addEventListener('click', () => {
    void (async () => {
      try {
        app.report = await app.api.regenerate(app.fearedEvent);
        await app.refresh();
      } catch (err) {
        app.state.error = err instanceof Error ? err.message : String(err);
        rerender(app);
      }
    })();
  });
  bar.append(regen);
  return bar;
}

function renderBanner(app: App): HTMLElement {
  const banner = el('div', 'banner');
  if (app.state.error) {
    banner.classList.add('error');
    banner.textContent = `API failure: ${app.state.error}`;
  } else if (app.state.retryPrompt) {
    banner.classList.add('retry');
    banner.textContent = 'Another write was in flight (409). Retry your decision.';
  }
  return banner;
}

function renderColumns(app: App): HTMLElement {
  const wrap = el('div', 'columns');
  wrap.append(renderTree(app), renderSidebar(app));
  return wrap;
}

function renderTree(app: App): HTMLElement {
  const tree = el('div', 'tree');
  for (const row of visibleRows(app.index, app.state)) {
    const node = app.index.byPath.get(row.path);
    if (!node) continue;
    const line = el('div', 'node');
    line.style.marginLeft = `${row.depth * 18}px`;
    const annotation = app.state.annotations.get(row.path);
    if (annotation?.decision === 'closed') line.classList.add('closed');
    if (annotation?.color) line.style.borderLeftColor = annotation.color;
    for (const flag of node.status) line.classList.add(`st-${flag}`);
    if (row.path === app.state.selected) line.classList.add('selected');

    const toggle = el('span', 'toggle');
    toggle.textContent = row.hasChildren && !row.sharedRef
      ? (row.expanded ? '▾' : '▸') : '·';
    if (row.hasChildren && !row.sharedRef) {
      toggle.addEventListener('click', () => {
        toggleExpanded(app.state, row.path);
        rerender(app);
      });
    }

    const gate = el('span', 'gate');
    gate.textContent = node.gate === 'and' ? 'AND' : (row.hasChildren ? 'OR' : '');

    const label = el('span', 'label');
    label.textContent = row.sharedRef ? `${node.label} (shared ↑)` : node.label;
    if (isShared(app.index, row.path) && !row.sharedRef) {
      label.textContent += '  ⧉';
      label.title = 'shared node (multiple parents)';
    }
    label.addEventListener('click', () => {
      app.state.selected = row.path;
      rerender(app);
    });

    const chips = el('span', 'chips');
    for (const flag of node.status) {
      if (flag === 'generated') continue;
      const chip = el('span', `chip chip-${flag}`);
      chip.textContent = flag;
      chips.append(chip);
    }
    if (annotation) {
      const chip = el('span', `chip chip-decision-${annotation.decision}`);
      chip.textContent = annotation.decision;
      chips.append(chip);
    }

    line.append(toggle, gate, label, chips);
    tree.append(line);
  }
  return tree;
}

function renderSidebar(app: App): HTMLElement {
  const side = el('div', 'sidebar');
  side.append(renderDecisionPanel(app), renderWorklist(app), renderOrphans(app));
  return side;
}

function renderDecisionPanel(app: App): HTMLElement {
  const panel = el('div', 'panel decision-panel');
  const heading = el('h3');
  heading.textContent = 'Decision';
  panel.append(heading);
  const path = app.state.selected;
  if (!path) {
    const hint = el('p', 'hint');
    hint.textContent = 'Select a node to develop or close it.';
    panel.append(hint);
    return panel;
  }
  const node = app.index.byPath.get(path);
  const current = app.state.annotations.get(path);

  const where = el('p', 'path');
  where.textContent = path;
  panel.append(where);
  if (node?.summary) {
    const summary = el('p', 'summary');
    summary.textContent =
      `warning stub: last seen with ${node.summary.node_count} nodes`;
    panel.append(summary);
  }

  const comment = document.createElement('textarea');
  comment.placeholder = 'comment';
  comment.value = current?.comment ?? '';
  panel.append(comment);

  const color = document.createElement('input');
  color.type = 'text';
  color.placeholder = 'colour code, e.g. #ffcc00';
  color.value = current?.color ?? '';
  panel.append(color);

  const buttons = el('div', 'buttons');
  for (const decision of ['developed', 'closed', 'open'] as Decision[]) {
    const btn = document.createElement('button');
    btn.textContent = decision === 'open' ? 'reopen' : decision;
    btn.addEventListener('click', () => {
      void (async () => {
        await submitDecision(app.api, app.state, path, {
          decision,
          comment: comment.value || undefined,
          color: color.value || undefined,
        });
        rerender(app);
      })();
    });
    buttons.append(btn);
  }
  panel.append(buttons);
  return panel;
}

function renderWorklist(app: App): HTMLElement {
  const panel = el('div', 'panel worklist');
  const heading = el('h3');
  heading.textContent = 'Review worklist';
  panel.append(heading);
  if (!app.report) {
    const hint = el('p', 'hint');
    hint.textContent = 'Regenerate to see architecture-change deltas.';
    panel.append(hint);
    return panel;
  }
  const entries = buildWorklist(app.report);
  if (entries.length === 0) {
    const hint = el('p', 'hint');
    hint.textContent = 'Nothing to review: the regeneration changed nothing.';
    panel.append(hint);
  }
  for (const entry of entries) {
    const row = el('div', `work-entry work-${entry.category}`);
    const tag = el('span', 'chip');
    tag.textContent = entry.category;
    const link = el('span', 'work-path');
    link.textContent = entry.path;
    link.addEventListener('click', () => {
      app.state.selected = entry.path;
      // expand every ancestor (via real parent links: shared-node paths
      // contain virtual segments) so the entry is visible
      const queue = [entry.path];
      while (queue.length > 0) {
        const path = queue.pop()!;
        if (app.state.expanded.has(path)) continue;
        app.state.expanded.add(path);
        queue.push(...(app.index.parents.get(path) ?? []));
      }
      rerender(app);
    });
    row.append(tag, link);
    panel.append(row);
  }
  return panel;
}

function renderOrphans(app: App): HTMLElement {
  const panel = el('div', 'panel orphans');
  const heading = el('h3');
  heading.textContent = 'Orphaned annotations';
  panel.append(heading);
  if (app.doc.orphaned_annotations.length === 0) {
    const hint = el('p', 'hint');
    hint.textContent = 'None.';
    panel.append(hint);
  }
  for (const path of app.doc.orphaned_annotations) {
    const row = el('div', 'orphan');
    row.textContent = path;
    panel.append(row);
  }
  return panel;
}

function rerender(app: App): void {
  const rootEl = document.getElementById('app');
  if (rootEl) render(app, rootEl);
}

function el(tag: string, className?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  return node;
}
