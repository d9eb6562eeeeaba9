/**
 * Diverging blue-white-red ramp. The stops are a fixed contract shared with
 * the server's map exporter; the legend and the heatmaps must match the PNGs
 * the analysis tooling writes for the same data.
 */

export type Rgb = [number, number, number];

export const COLOR_STOPS: ReadonlyArray<readonly [number, Rgb]> = [
  [0.0, [0.02, 0.188, 0.38]],
  [0.25, [0.42, 0.682, 0.839]],
  [0.5, [0.969, 0.969, 0.969]],
  [0.75, [0.839, 0.376, 0.302]],
  [1.0, [0.404, 0.0, 0.122]],
];

/** Color at normalized position t in [0, 1]; clamps outside. */
export function colormapRgb(t: number): Rgb {
  const u = Math.min(Math.max(t, 0), 1);
  for (let i = 1; i < COLOR_STOPS.length; i++) {
    const [t0, c0] = COLOR_STOPS[i - 1];
    const [t1, c1] = COLOR_STOPS[i];
    if (u <= t1) {
      const f = t1 === t0 ? 0 : (u - t0) / (t1 - t0);
      return [
        c0[0] + f * (c1[0] - c0[0]),
        c0[1] + f * (c1[1] - c0[1]),
        c0[2] + f * (c1[2] - c0[2]),
      ];
    }
  }
  return COLOR_STOPS[COLOR_STOPS.length - 1][1];
}

/** Map a field value on the symmetric scale [-vmax, vmax] to a color. */
export function valueToRgb(value: number, vmax: number): Rgb {
  if (vmax <= 0) return colormapRgb(0.5);
  return colormapRgb(0.5 + value / (2 * vmax));
}

/** CSS linear-gradient stop list for the legend strip. */
export function legendGradient(): string {
  const stops = COLOR_STOPS.map(([t, [r, g, b]]) => {
    const to255 = (v: number) => Math.round(v * 255);
    return `rgb(${to255(r)},${to255(g)},${to255(b)}) ${(t * 100).toFixed(0)}%`;
  });
  return `linear-gradient(to right, ${stops.join(", ")})`;
}
