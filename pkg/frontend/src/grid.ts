/** Pure helpers for rendering the service's ASCII frames. */

export interface FrameCell {
  x: number;
  y: number;
  char: string;
  css: string;
}

const CSS_BY_CHAR: Record<string, string> = {
  ".": "cell-floor",
  "#": "cell-wall",
  "G": "cell-goal",
  "L": "cell-lava",
  "@": "cell-agent",
};

/** Frames arrive top row first; cell (x, 0) is the bottom-left corner. */
export function frameToCells(frame: readonly string[]): FrameCell[] {
  const height = frame.length;
  const cells: FrameCell[] = [];
  frame.forEach((row, i) => {
    [...row].forEach((char, x) => {
      cells.push({ x, y: height - 1 - i, char,
                   css: CSS_BY_CHAR[char] ?? "cell-unknown" });
    });
  });
  return cells;
}

export function agentCell(frame: readonly string[]): [number, number] | null {
  for (const c of frameToCells(frame)) {
    if (c.char === "@") return [c.x, c.y];
  }
  return null;
}

/** Bucket a reward trace for a simple bar strip; pure and total. */
export function sparkline(values: readonly number[], width = 20): string {
  if (values.length === 0) return "";
  const bars = "▁▂▃▄▅▆▇█";
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const span = hi - lo || 1;
  const step = Math.max(1, Math.ceil(values.length / width));
  let out = "";
  for (let i = 0; i < values.length; i += step) {
    const chunk = values.slice(i, i + step);
    const mean = chunk.reduce((a, b) => a + b, 0) / chunk.length;
    const idx = Math.min(bars.length - 1,
                         Math.floor(((mean - lo) / span) * bars.length));
    out += bars[idx];
  }
  return out;
}
