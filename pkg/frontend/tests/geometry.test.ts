import { describe, expect, it } from "vitest";

import {
  Point,
  pointInRegion,
  pointInRing,
  ringSelfIntersects,
  ringsBounds,
  segmentsIntersect,
} from "../src/geometry.js";

const square: Point[] = [
  [0, 0],
  [4, 0],
  [4, 4],
  [0, 4],
];

describe("segmentsIntersect", () => {
  it("detects a proper crossing", () => {
    expect(segmentsIntersect([0, 0], [2, 2], [0, 2], [2, 0])).toBe(true);
  });

  it("rejects parallel separated segments", () => {
    expect(segmentsIntersect([0, 0], [2, 0], [0, 1], [2, 1])).toBe(false);
  });

  it("counts an endpoint touching the other segment", () => {
    expect(segmentsIntersect([0, 0], [4, 0], [2, 0], [2, 3])).toBe(true);
  });
});

describe("ringSelfIntersects", () => {
  it("accepts a convex ring", () => {
    expect(ringSelfIntersects(square)).toBe(false);
  });

  it("flags a bowtie", () => {
    const bowtie: Point[] = [
      [0, 0],
      [2, 2],
      [2, 0],
      [0, 2],
    ];
    expect(ringSelfIntersects(bowtie)).toBe(true);
  });

  it("accepts a concave but simple ring", () => {
    const arrow: Point[] = [
      [0, 0],
      [4, 0],
      [4, 4],
      [2, 1],
      [0, 4],
    ];
    expect(ringSelfIntersects(arrow)).toBe(false);
  });

  it("checks the wrap edge only on closed rings", () => {
    // closing this hook back to the start cuts through the right edge
    const hook: Point[] = [
      [0, 0],
      [4, 0],
      [4, 4],
      [5, 2],
    ];
    expect(ringSelfIntersects(hook, false)).toBe(false);
    expect(ringSelfIntersects(hook, true)).toBe(true);
    const drawnCross: Point[] = [
      [0, 0],
      [2, 2],
      [2, 0],
      [0, 2],
    ];
    // here the first and third drawn edges already cross at (1,1)
    expect(ringSelfIntersects(drawnCross, false)).toBe(true);
  });

  it("flags a vertex landing on an earlier edge", () => {
    const spike: Point[] = [
      [0, 0],
      [4, 0],
      [2, 0],
      [2, 3],
    ];
    expect(ringSelfIntersects(spike, false)).toBe(true);
  });

  it("handles rings too short to cross", () => {
    expect(ringSelfIntersects([[0, 0]])).toBe(false);
    expect(ringSelfIntersects([[0, 0], [1, 1], [2, 0]])).toBe(false);
  });
});

describe("pointInRing", () => {
  it("accepts interior points and rejects exterior ones", () => {
    expect(pointInRing([2, 2], square)).toBe(true);
    expect(pointInRing([5, 2], square)).toBe(false);
    expect(pointInRing([-1, -1], square)).toBe(false);
  });

  it("counts the boundary as inside", () => {
    expect(pointInRing([0, 2], square)).toBe(true);
    expect(pointInRing([4, 4], square)).toBe(true);
  });
});

describe("pointInRegion", () => {
  const hole: Point[] = [
    [1, 1],
    [3, 1],
    [3, 3],
    [1, 3],
  ];

  it("excludes points inside a hole", () => {
    expect(pointInRegion([2, 2], [square, hole], [false, true])).toBe(false);
    expect(pointInRegion([0.5, 0.5], [square, hole], [false, true])).toBe(true);
    expect(pointInRegion([9, 9], [square, hole], [false, true])).toBe(false);
  });

  it("unions disjoint outer rings", () => {
    const far: Point[] = [
      [10, 10],
      [12, 10],
      [12, 12],
      [10, 12],
    ];
    expect(pointInRegion([11, 11], [square, far], [false, false])).toBe(true);
  });
});

describe("ringsBounds", () => {
  it("covers every ring", () => {
    expect(ringsBounds([square, [[-2, 7], [1, 7], [1, 9]]])).toEqual({
      minX: -2,
      minY: 0,
      maxX: 4,
      maxY: 9,
    });
  });

  it("returns null with no vertices", () => {
    expect(ringsBounds([])).toBeNull();
    expect(ringsBounds([[]])).toBeNull();
  });
});
