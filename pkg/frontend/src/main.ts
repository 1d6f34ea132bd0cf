/** Annotator app: polls the active interactive session and renders one
 *  query at a time, plus a metrics panel and a proactive-flag shelf. */
import { ApiClient } from "./api.js";
import {
  metricsPanel, proactiveCritique, renderFrame, widgetFor,
} from "./components.js";
import type { PendingQuery, TargetDict } from "./types.js";

const POLL_MS = 750;
const ANNOTATOR = "ui";

function mount(root: HTMLElement, api: ApiClient): void {
  const queryPane = document.createElement("div");
  queryPane.className = "pane query-pane";
  const sidePane = document.createElement("div");
  sidePane.className = "pane side-pane";
  root.append(queryPane, sidePane);

  let shownQueryId: string | null = null;
  let busy = false;

  const tick = async () => {
    if (busy) return;
    busy = true;
    try {
      const { sessions } = await api.listSessions();
      const live = sessions.find((s) => s.mode === "interactive" && !s.finished)
          ?? sessions[sessions.length - 1];
      if (!live) return;
      const sid = live.session_id;

      sidePane.textContent = "";
      sidePane.appendChild(metricsPanel(await api.metrics(sid)));

      const { queries } = await api.pendingQueries(sid);
      const query = queries[0];
      if (!query) {
        if (shownQueryId !== null) queryPane.textContent = "Waiting…";
        shownQueryId = null;
        return;
      }
      if (query.query_id === shownQueryId) return;
      shownQueryId = query.query_id;
      await showQuery(queryPane, sidePane, api, sid, query);
    } catch {
      // server between rounds or restarting; keep polling
    } finally {
      busy = false;
    }
  };
  window.setInterval(tick, POLL_MS);
  void tick();
}

async function showQuery(queryPane: HTMLElement, sidePane: HTMLElement,
                         api: ApiClient, sid: string,
                         query: PendingQuery): Promise<void> {
  queryPane.textContent = "";
  query.frames.forEach((clip) => {
    const last = clip[clip.length - 1];
    if (last) queryPane.appendChild(renderFrame(last));
  });

  const replacements = await correctionChoices(api, sid, query);
  queryPane.appendChild(widgetFor(query, ANNOTATOR, replacements, (m) => {
    void api.postMeasurement(sid, query.query_id, m);
    queryPane.textContent = "Submitted.";
  }));

  const flagTarget = query.targets[0];
  if (flagTarget?.kind === "segment") {
    sidePane.appendChild(proactiveCritique(flagTarget, ANNOTATOR, (m) => {
      void api.postProactive(sid, m);
    }));
  }
}

/** Offer segments from other episodes as replacements for a correction. */
async function correctionChoices(api: ApiClient, sid: string,
                                 query: PendingQuery): Promise<TargetDict[]> {
  if (query.kind !== "SegmentCorrection") return [];
  const original = query.targets[0];
  const { episodes } = await api.episodes(sid, 0, 20);
  const span = (original?.stop ?? 1) - (original?.start ?? 0);
  return episodes
      .filter((e) => e.episode_id !== original?.episode_id && e.length >= span)
      .slice(0, 8)
      .map((e) => ({ kind: "segment", episode_id: e.episode_id,
                     start: 0, stop: span } as TargetDict));
}

const root = document.getElementById("app");
if (root) mount(root, new ApiClient(""));
