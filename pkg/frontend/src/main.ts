/** Browser bootstrap: pick the feared event, fetch its merged tree and
 * hand everything to the renderer. */

import { ApiClient } from './api.js';
import { render, App } from './render.js';
import { indexTree, initialState } from './state.js';

async function boot(): Promise<void> {
  const rootEl = document.getElementById('app');
  if (!rootEl) return;
  const api = new ApiClient('');
  let fearedEvent = new URLSearchParams(window.location.search).get('fe');
  try {
    if (!fearedEvent) {
      const listing = await api.events();
      fearedEvent = listing.feared_events[0]?.id ?? null;
    }
    if (!fearedEvent) {
      rootEl.textContent = 'No feared events in the served bundle.';
      return;
    }
    const doc = await api.tree(fearedEvent);
    const index = indexTree(doc);
    const app: App = {
      api,
      fearedEvent,
      doc,
      index,
      state: initialState(doc, index),
      report: null,
      refresh: async () => {
        app.doc = await api.tree(app.fearedEvent);
        app.index = indexTree(app.doc);
        // keep expansion/filter/selection; resync annotations from server
        const fresh = initialState(app.doc, app.index);
        app.state.annotations = fresh.annotations;
        render(app, rootEl);
      },
    };
    render(app, rootEl);
  } catch (err) {
    rootEl.textContent = `API failure: ${err instanceof Error ? err.message : err}`;
  }
}

void boot();
