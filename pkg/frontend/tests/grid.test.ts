import { describe, expect, it } from "vitest";
import { agentCell, frameToCells, sparkline } from "../src/grid.js";

const FRAME = [
  "..G",
  "#L.",
  "@..",
];

describe("frameToCells", () => {
  it("flips rows so (0, 0) is the bottom-left cell", () => {
    const cells = frameToCells(FRAME);
    expect(cells).toHaveLength(9);
    const at = (x: number, y: number) =>
        cells.find((c) => c.x === x && c.y === y)!;
    expect(at(0, 0).char).toBe("@");
    expect(at(2, 2).char).toBe("G");
    expect(at(1, 1).css).toBe("cell-lava");
    expect(at(0, 1).css).toBe("cell-wall");
    expect(at(1, 0).css).toBe("cell-floor");
  });

  it("maps unknown glyphs to a fallback class", () => {
    expect(frameToCells(["?"])[0]!.css).toBe("cell-unknown");
  });
});

describe("agentCell", () => {
  it("finds the agent in grid coordinates", () => {
    expect(agentCell(FRAME)).toEqual([0, 0]);
    expect(agentCell(["...", "..."])).toBeNull();
  });
});

describe("sparkline", () => {
  it("is empty for no data and spans the bar alphabet otherwise", () => {
    expect(sparkline([])).toBe("");
    const line = sparkline([0, 1, 2, 3], 4);
    expect(line).toHaveLength(4);
    expect(line[0]).toBe("▁");
    expect(line[3]).toBe("█");
  });

  it("buckets long traces down to the requested width", () => {
    const line = sparkline(Array.from({ length: 200 }, (_, i) => i), 20);
    expect(line.length).toBeLessThanOrEqual(20);
  });

  it("handles constant traces without dividing by zero", () => {
    expect(sparkline([5, 5, 5], 3)).toBe("▁▁▁");
  });
});
