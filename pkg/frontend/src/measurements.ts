/** Pure builders for the measurement payloads the service accepts.
 *
 * The UI never computes rewards or translations; every numeric here is a
 * value the user entered (slider position, rank order, brushed features) or
 * a captured timing.
 */
import type { MeasurementDict, TargetDict } from "./types.js";

function base(intrinsic: Record<string, unknown>,
              annotatorId: string,
              proactive = false): MeasurementDict {
  const contextual: Record<string, unknown> = { annotator_id: annotatorId };
  if (proactive) contextual["proactive"] = true;
  return { intrinsic, contextual, timestamp: Date.now() / 1000 };
}

/** Continuous rating in [-1, 1] on a single target. */
export function ratingMeasurement(target: TargetDict, widget: number,
                                  annotatorId: string): MeasurementDict {
  if (!Number.isFinite(widget) || widget < -1 || widget > 1) {
    throw new RangeError(`rating widget out of [-1, 1]: ${widget}`);
  }
  return base({ targets: [target], widget, scale: null }, annotatorId);
}

/** Thumbs up/down critique of a single target. */
export function critiqueMeasurement(target: TargetDict, option: 1 | -1,
                                    annotatorId: string,
                                    proactive = false): MeasurementDict {
  return base({ targets: [target], option }, annotatorId, proactive);
}

/** Preferred index of a two-target choice. */
export function choiceMeasurement(targets: TargetDict[], choiceIndex: number,
                                  annotatorId: string): MeasurementDict {
  if (targets.length !== 2) throw new RangeError("choice needs 2 targets");
  if (choiceIndex !== 0 && choiceIndex !== 1) {
    throw new RangeError(`choice index must be 0 or 1: ${choiceIndex}`);
  }
  return base({ targets, choice_index: choiceIndex }, annotatorId);
}

/** Full ranking: `ranks[i]` is the position the user gave target i (0 = best);
 * equal ranks become tie groups. */
export function rankingMeasurement(targets: TargetDict[], ranks: number[],
                                   annotatorId: string): MeasurementDict {
  if (ranks.length !== targets.length) {
    throw new RangeError("one rank per target required");
  }
  const byRank = new Map<number, number[]>();
  ranks.forEach((r, i) => {
    if (!Number.isInteger(r) || r < 0) throw new RangeError(`bad rank ${r}`);
    byRank.set(r, [...(byRank.get(r) ?? []), i]);
  });
  const order = [...byRank.entries()].sort((a, b) => a[0] - b[0])
    .map(([, group]) => group);
  return base({ targets, order }, annotatorId);
}

/** Correction: the corrected segment should replace the original one. */
export function correctionMeasurement(original: TargetDict,
                                      corrected: TargetDict,
                                      annotatorId: string): MeasurementDict {
  return base({ targets: [original, corrected] }, annotatorId);
}

/** Feature brush: the brushed feature indices matter, with the given sign. */
export function featureBrushMeasurement(featureIndices: number[],
                                        sign: 1 | -1,
                                        annotatorId: string,
                                        cells: [number, number][] = []):
    MeasurementDict {
  if (featureIndices.length === 0) {
    throw new RangeError("brush at least one feature");
  }
  const unique = [...new Set(featureIndices)].sort((a, b) => a - b);
  const target: TargetDict = { kind: "feature_set", feature_indices: unique };
  if (cells.length) target.cells = cells;
  return base({ feature_indices: unique, sign, targets: [target],
                ...(cells.length ? { cells } : {}) }, annotatorId);
}

/** Move one item of a ranking list; returns the new order (pure). */
export function moveItem<T>(items: readonly T[], from: number,
                            to: number): T[] {
  if (from < 0 || from >= items.length || to < 0 || to >= items.length) {
    throw new RangeError(`move ${from} -> ${to} out of bounds`);
  }
  const next = items.slice();
  const [picked] = next.splice(from, 1);
  next.splice(to, 0, picked as T);
  return next;
}
