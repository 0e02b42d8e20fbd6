import { describe, expect, it } from "vitest";

import { XyzError, parseXyz, projectAtoms } from "../src/xyz.js";

const WATER = `3
water molecule
O 0.000000 0.000000 0.117300
H 0.000000 0.757200 -0.469200
H 0.000000 -0.757200 -0.469200
`;

describe("parseXyz", () => {
  it("parses a well-formed file", () => {
    const parsed = parseXyz(WATER);
    expect(parsed.count).toBe(3);
    expect(parsed.comment).toBe("water molecule");
    expect(parsed.atoms.map((a) => a.el)).toEqual(["O", "H", "H"]);
    expect(parsed.atoms[1].y).toBeCloseTo(0.7572);
  });

  it("rejects a count mismatch", () => {
    expect(() => parseXyz("4\nbad\nH 0 0 0\nH 1 0 0\n")).toThrow(XyzError);
  });

  it("rejects a non-numeric coordinate", () => {
    expect(() => parseXyz("1\n\nH zero 0 0\n")).toThrow(/non-numeric/);
  });

  it("rejects an empty document", () => {
    expect(() => parseXyz("")).toThrow(XyzError);
  });

  it("rejects a short atom line", () => {
    expect(() => parseXyz("1\n\nH 0 0\n")).toThrow(/bad atom line/);
  });
});

describe("projectAtoms", () => {
  it("returns one ball per atom inside the viewport", () => {
    const balls = projectAtoms(parseXyz(WATER).atoms, 320);
    expect(balls).toHaveLength(3);
    for (const ball of balls) {
      expect(ball.x).toBeGreaterThanOrEqual(0);
      expect(ball.x).toBeLessThanOrEqual(320);
      expect(ball.y).toBeGreaterThanOrEqual(0);
      expect(ball.y).toBeLessThanOrEqual(320);
      expect(ball.r).toBeGreaterThan(0);
    }
  });

  it("sorts balls back to front", () => {
    const atoms = [
      { el: "C", x: 0, y: 0, z: -2 },
      { el: "O", x: 0, y: 0, z: 2 },
      { el: "H", x: 0, y: 0, z: 0 },
    ];
    const balls = projectAtoms(atoms, 200, 0, 0);
    expect(balls.map((b) => b.el)).toEqual(["C", "H", "O"]);
  });

  it("handles a single atom without degenerate scaling", () => {
    const balls = projectAtoms([{ el: "H", x: 5, y: 5, z: 5 }], 100);
    expect(balls[0].x).toBeCloseTo(50);
    expect(balls[0].y).toBeCloseTo(50);
  });
});
