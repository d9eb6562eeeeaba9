/**
 * Turn a flat scalar layer (ix-major, nx*ny entries, as returned by the
 * frames endpoint) into RGBA pixels on the symmetric diverging scale.
 * Pure array-in/array-out so it is testable without a canvas.
 */

import { valueToRgb } from "./colormap.js";
import type { GridInfo } from "./types.js";

export interface HeatmapPixels {
  width: number; // nx
  height: number; // ny
  data: Uint8ClampedArray<ArrayBuffer>; // RGBA, row = constant y, y flipped so up is up
  vmax: number;
}

/** Largest |value|, ignoring non-finite entries; 0 for an empty/NaN layer. */
export function symmetricMax(values: ArrayLike<number>): number {
  let m = 0;
  for (let i = 0; i < values.length; i++) {
    const a = Math.abs(values[i]);
    if (Number.isFinite(a) && a > m) m = a;
  }
  return m;
}

export function renderScalarLayer(
  values: number[],
  grid: GridInfo,
  vmax?: number,
): HeatmapPixels {
  const { nx, ny } = grid;
  if (values.length !== nx * ny) {
    throw new Error(`layer has ${values.length} entries, expected ${nx}x${ny}`);
  }
  const scale = vmax ?? symmetricMax(values);
  const data = new Uint8ClampedArray(nx * ny * 4);
  for (let iy = 0; iy < ny; iy++) {
    for (let ix = 0; ix < nx; ix++) {
      const v = values[ix * ny + iy];
      // image rows run top to bottom; flip so increasing y points up
      const px = ((ny - 1 - iy) * nx + ix) * 4;
      if (!Number.isFinite(v)) {
        data[px + 3] = 0; // transparent for missing data
        continue;
      }
      const [r, g, b] = valueToRgb(v, scale);
      data[px] = Math.round(r * 255);
      data[px + 1] = Math.round(g * 255);
      data[px + 2] = Math.round(b * 255);
      data[px + 3] = 255;
    }
  }
  return { width: nx, height: ny, data, vmax: scale };
}

/** Speed magnitude per node from the velocity layer's [vx, vy] pairs. */
export function speedFromVelocity(velocity: number[][]): number[] {
  return velocity.map(([vx, vy]) => Math.hypot(vx, vy));
}
