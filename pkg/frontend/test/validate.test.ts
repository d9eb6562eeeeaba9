import { describe, expect, it } from "vitest";

import { circleSdf, rectSdf, validateScenario } from "../src/validate.js";

const base = {
  width: 100,
  height: 80,
  dx: 2.0,
  walls: [],
  exits: [{ x0: 40, y0: 0, x1: 60, y1: 0 }],
  spawns: [{ region: { x: 10, y: 10, w: 30, h: 20 }, count: 12, r_a: 2, r_b: 4 }],
  dt: 0.5,
  steps: 50,
};

describe("signed distances", () => {
  it("rectSdf is negative inside, zero on the face, positive outside", () => {
    expect(rectSdf(5, 5, 0, 0, 10, 10)).toBeLessThan(0);
    expect(rectSdf(10, 5, 0, 0, 10, 10)).toBe(0);
    expect(rectSdf(13, 5, 0, 0, 10, 10)).toBeCloseTo(3);
    expect(rectSdf(13, 14, 0, 0, 10, 10)).toBeCloseTo(5);
  });

  it("circleSdf measures from the rim", () => {
    expect(circleSdf(10, 0, 0, 0, 4)).toBeCloseTo(6);
    expect(circleSdf(1, 0, 0, 0, 4)).toBeCloseTo(-3);
  });
});

describe("validateScenario", () => {
  it("accepts a well-formed document", () => {
    expect(validateScenario(base)).toEqual([]);
  });

  it("reports schema violations with dotted paths", () => {
    const doc = {
      ...base,
      spawns: [{ region: { x: 0, y: 0, w: 10, h: 10 }, count: 5, r_a: 4, r_b: 3 }],
    };
    const problems = validateScenario(doc);
    expect(problems.length).toBeGreaterThan(0);
    expect(problems[0].path).toBe("spawns.0.r_b");
  });

  it("rejects non-positive geometry before running geometry checks", () => {
    const doc = { ...base, dx: 0 };
    const problems = validateScenario(doc);
    expect(problems.some((p) => p.path === "dx")).toBe(true);
  });

  it("flags spawn regions leaking outside the domain", () => {
    const doc = {
      ...base,
      spawns: [{ region: { x: 80, y: 10, w: 30, h: 20 }, count: 12, r_a: 2, r_b: 4 }],
    };
    const problems = validateScenario(doc);
    expect(problems).toEqual([
      { path: "spawns.0.region", message: "spawn region extends outside the domain" },
    ]);
  });

  it("flags exits floating in the interior", () => {
    const doc = { ...base, exits: [{ x0: 40, y0: 20, x1: 60, y1: 20 }] };
    const problems = validateScenario(doc);
    expect(problems).toHaveLength(2); // both endpoints are off any solid face
    expect(problems[0].path).toBe("exits.0");
    expect(problems[0].message).toMatch(/not on the domain boundary or a wall face/);
  });

  it("accepts exits on a wall face even away from the domain edge", () => {
    const doc = {
      ...base,
      walls: [{ type: "rect", x: 30, y: 30, w: 40, h: 4 }],
      exits: [{ x0: 35, y0: 30, x1: 45, y1: 30 }],
    };
    expect(validateScenario(doc)).toEqual([]);
  });

  it("allows endpoints within half a cell of the boundary", () => {
    const doc = { ...base, exits: [{ x0: 40, y0: 0.9, x1: 60, y1: 0.9 }] };
    expect(validateScenario(doc)).toEqual([]); // 0.9 < 0.5 * dx = 1.0
    const off = { ...base, exits: [{ x0: 40, y0: 1.1, x1: 60, y1: 1.1 }] };
    expect(validateScenario(off)).toHaveLength(2);
  });
});
