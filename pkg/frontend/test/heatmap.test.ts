import { describe, expect, it } from "vitest";

import { renderScalarLayer, speedFromVelocity, symmetricMax } from "../src/heatmap.js";
import type { GridInfo } from "../src/types.js";

const GRID: GridInfo = { nx: 2, ny: 2, dx: 1, origin: [0, 0] };

describe("symmetricMax", () => {
  it("takes the largest magnitude and ignores non-finite entries", () => {
    expect(symmetricMax([1, -4, 2])).toBe(4);
    expect(symmetricMax([NaN, Infinity, -0.5])).toBe(0.5);
    expect(symmetricMax([])).toBe(0);
  });
});

describe("renderScalarLayer", () => {
  it("rejects a layer whose length disagrees with the grid", () => {
    expect(() => renderScalarLayer([1, 2, 3], GRID)).toThrow(/expected 2x2/);
  });

  it("places node (ix, iy) with +y upward", () => {
    // values are ix-major: [v00, v01, v10, v11]
    const pixels = renderScalarLayer([-1, 0, 0, 1], GRID, 1);
    expect(pixels.width).toBe(2);
    expect(pixels.height).toBe(2);
    // node (0,0) -> bottom-left pixel = row 1, col 0
    const bottomLeft = (1 * 2 + 0) * 4;
    expect([...pixels.data.slice(bottomLeft, bottomLeft + 4)]).toEqual([5, 48, 97, 255]);
    // node (1,1) -> top-right pixel = row 0, col 1
    const topRight = (0 * 2 + 1) * 4;
    expect([...pixels.data.slice(topRight, topRight + 4)]).toEqual([103, 0, 31, 255]);
    // zeros land on the white center
    const topLeft = 0;
    expect([...pixels.data.slice(topLeft, topLeft + 3)]).toEqual([247, 247, 247]);
  });

  it("autoscales to the largest magnitude when vmax is omitted", () => {
    const auto = renderScalarLayer([-2, 0, 0, 2], GRID);
    expect(auto.vmax).toBe(2);
    const manual = renderScalarLayer([-2, 0, 0, 2], GRID, 2);
    expect([...auto.data]).toEqual([...manual.data]);
  });

  it("renders non-finite nodes fully transparent", () => {
    const pixels = renderScalarLayer([NaN, 0, Infinity, 1], GRID, 1);
    const bottomLeft = (1 * 2 + 0) * 4; // node (0,0) = NaN
    expect(pixels.data[bottomLeft + 3]).toBe(0);
    const bottomRight = (1 * 2 + 1) * 4; // node (1,0) = Infinity
    expect(pixels.data[bottomRight + 3]).toBe(0);
    const topLeft = 0; // node (0,1) = 0 stays opaque
    expect(pixels.data[topLeft + 3]).toBe(255);
  });
});

describe("speedFromVelocity", () => {
  it("reduces [vx, vy] pairs to magnitudes", () => {
    expect(speedFromVelocity([[3, 4], [0, 0], [-1, 0]])).toEqual([5, 0, 1]);
  });
});
