/** Small DOM components; all payload construction lives in measurements.ts. */
import { frameToCells, sparkline } from "./grid.js";
import {
  choiceMeasurement, correctionMeasurement, critiqueMeasurement,
  featureBrushMeasurement, moveItem, ratingMeasurement, rankingMeasurement,
} from "./measurements.js";
import type {
  MeasurementDict, MetricsSnapshot, PendingQuery, TargetDict,
} from "./types.js";

export type Submit = (m: MeasurementDict) => void;

export const FEATURE_NAMES = [
  "bias", "goal distance x", "goal distance y", "at goal", "on lava",
  "next to lava", "step", "blocked move",
];

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K, className = "", text = ""): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

export function renderFrame(frame: string[]): HTMLElement {
  const box = el("div", "frame");
  const height = frame.length;
  const grid = el("div", "frame-grid");
  grid.style.gridTemplateColumns =
      `repeat(${frame[0]?.length ?? 0}, 1.2em)`;
  for (const cell of frameToCells(frame)) {
    const d = el("div", `cell ${cell.css}`, cell.char);
    d.style.gridRow = String(height - cell.y);
    d.style.gridColumn = String(cell.x + 1);
    grid.appendChild(d);
  }
  box.appendChild(grid);
  return box;
}

function targetLabel(t: TargetDict): string {
  if (t.kind === "segment") return `${t.episode_id}[${t.start}:${t.stop}]`;
  if (t.kind === "episode") return `${t.episode_id}`;
  if (t.kind === "state_action") return `${t.episode_id}@${t.index}`;
  if (t.kind === "feature_set") return `features ${t.feature_indices}`;
  return t.kind;
}

export function ratingSlider(query: PendingQuery, annotator: string,
                             submit: Submit): HTMLElement {
  const box = el("div", "widget rating");
  box.appendChild(el("h3", "", `Rate ${targetLabel(query.targets[0]!)}`));
  const slider = el("input") as HTMLInputElement;
  slider.type = "range";
  slider.min = "-100";
  slider.max = "100";
  slider.value = "0";
  const readout = el("span", "readout", "0.00");
  slider.addEventListener("input", () => {
    readout.textContent = (Number(slider.value) / 100).toFixed(2);
  });
  const button = el("button", "", "Submit rating");
  button.addEventListener("click", () => submit(ratingMeasurement(
      query.targets[0]!, Number(slider.value) / 100, annotator)));
  box.append(slider, readout, button);
  return box;
}

export function pairwiseChooser(query: PendingQuery, annotator: string,
                                submit: Submit): HTMLElement {
  const box = el("div", "widget choice");
  box.appendChild(el("h3", "", "Which behavior is better?"));
  query.targets.slice(0, 2).forEach((t, i) => {
    const button = el("button", "", targetLabel(t));
    button.addEventListener("click",
                            () => submit(choiceMeasurement(
                                query.targets.slice(0, 2), i, annotator)));
    box.appendChild(button);
  });
  return box;
}

export function rankingBoard(query: PendingQuery, annotator: string,
                             submit: Submit): HTMLElement {
  const box = el("div", "widget ranking");
  box.appendChild(el("h3", "", "Drag to rank (best first)"));
  let order = query.targets.map((_, i) => i);
  const list = el("ul", "rank-list");

  const redraw = () => {
    list.textContent = "";
    order.forEach((targetIndex, position) => {
      const item = el("li", "rank-item",
                      `${position + 1}. ${targetLabel(
                          query.targets[targetIndex]!)}`);
      item.draggable = true;
      item.addEventListener("dragstart", (e) => {
        e.dataTransfer?.setData("text/plain", String(position));
      });
      item.addEventListener("dragover", (e) => e.preventDefault());
      item.addEventListener("drop", (e) => {
        e.preventDefault();
        const from = Number(e.dataTransfer?.getData("text/plain"));
        order = moveItem(order, from, position);
        redraw();
      });
      list.appendChild(item);
    });
  };
  redraw();

  const button = el("button", "", "Submit ranking");
  button.addEventListener("click", () => {
    const ranks = query.targets.map((_, i) => order.indexOf(i));
    submit(rankingMeasurement(query.targets, ranks, annotator));
  });
  box.append(list, button);
  return box;
}

export function correctionEditor(query: PendingQuery, annotator: string,
                                 replacements: TargetDict[],
                                 submit: Submit): HTMLElement {
  const box = el("div", "widget correction");
  box.appendChild(el("h3", "",
                     `Replace ${targetLabel(query.targets[0]!)} with:`));
  const select = el("select") as HTMLSelectElement;
  replacements.forEach((t, i) => {
    const option = el("option", "", targetLabel(t)) as HTMLOptionElement;
    option.value = String(i);
    select.appendChild(option);
  });
  const button = el("button", "", "Submit correction");
  button.addEventListener("click", () => {
    const corrected = replacements[Number(select.value)];
    if (corrected) {
      submit(correctionMeasurement(query.targets[0]!, corrected, annotator));
    }
  });
  box.append(select, button);
  return box;
}

export function featureBrush(annotator: string, submit: Submit): HTMLElement {
  const box = el("div", "widget brush");
  box.appendChild(el("h3", "", "Brush the features that matter"));
  const checks: HTMLInputElement[] = [];
  FEATURE_NAMES.forEach((name, i) => {
    const label = el("label", "", ` ${name}`);
    const check = el("input") as HTMLInputElement;
    check.type = "checkbox";
    check.dataset["index"] = String(i);
    checks.push(check);
    label.prepend(check);
    box.appendChild(label);
  });
  for (const sign of [1, -1] as const) {
    const button = el("button", "", sign > 0 ? "Matters (+)" : "Matters (−)");
    button.addEventListener("click", () => {
      const indices = checks.filter((c) => c.checked)
          .map((c) => Number(c.dataset["index"]));
      if (indices.length) {
        submit(featureBrushMeasurement(indices, sign, annotator));
      }
    });
    box.appendChild(button);
  }
  return box;
}

export function proactiveCritique(target: TargetDict, annotator: string,
                                  submit: Submit): HTMLElement {
  const box = el("div", "widget proactive");
  box.appendChild(el("h3", "", `Flag ${targetLabel(target)}`));
  for (const option of [1, -1] as const) {
    const button = el("button", "", option > 0 ? "Good" : "Bad");
    button.addEventListener("click", () => submit(
        critiqueMeasurement(target, option, annotator, true)));
    box.appendChild(button);
  }
  return box;
}

export function metricsPanel(snapshot: MetricsSnapshot): HTMLElement {
  const box = el("div", "widget metrics");
  box.appendChild(el("h3", "", "Training"));
  const alignment = snapshot.latest?.["alignment"];
  box.appendChild(el("p", "", `round ${snapshot.round} · `
      + `${snapshot.n_instances} instances · `
      + `${snapshot.n_episodes} episodes`
      + (typeof alignment === "number"
         ? ` · alignment ${alignment.toFixed(3)}` : "")));
  box.appendChild(el("pre", "loss", sparkline(snapshot.loss_trace)));
  return box;
}

export function widgetFor(query: PendingQuery, annotator: string,
                          replacements: TargetDict[],
                          submit: Submit): HTMLElement {
  switch (query.kind) {
    case "RatingSlider": return ratingSlider(query, annotator, submit);
    case "PairwiseChoice": return pairwiseChooser(query, annotator, submit);
    case "RankingList": return rankingBoard(query, annotator, submit);
    case "SegmentCorrection":
      return correctionEditor(query, annotator, replacements, submit);
    case "FeatureBrush": return featureBrush(annotator, submit);
    default: return pairwiseChooser(query, annotator, submit);
  }
}
