/**
 * Small planar helpers for the sketch editor and region picker.
 *
 * These exist only to give instant feedback in the browser (warn about a
 * self-crossing ring, hit-test a click against a region outline). They are
 * never a substitute for the service's geometry: descriptors and distances
 * always come from the API.
 */

export type Point = [number, number];

function orient(a: Point, b: Point, c: Point): number {
  return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
}

function onSegment(a: Point, b: Point, p: Point): boolean {
  return (
    Math.min(a[0], b[0]) <= p[0] &&
    p[0] <= Math.max(a[0], b[0]) &&
    Math.min(a[1], b[1]) <= p[1] &&
    p[1] <= Math.max(a[1], b[1])
  );
}

/** Whether closed segments ab and cd share any point. */
export function segmentsIntersect(a: Point, b: Point, c: Point, d: Point): boolean {
  const o1 = orient(a, b, c);
  const o2 = orient(a, b, d);
  const o3 = orient(c, d, a);
  const o4 = orient(c, d, b);
  if (o1 * o2 < 0 && o3 * o4 < 0) return true;
  if (o1 === 0 && onSegment(a, b, c)) return true;
  if (o2 === 0 && onSegment(a, b, d)) return true;
  if (o3 === 0 && onSegment(c, d, a)) return true;
  if (o4 === 0 && onSegment(c, d, b)) return true;
  return false;
}

/**
 * True when the ring's edges cross each other.
 *
 * Adjacent edges legitimately share an endpoint, so only non-neighbouring
 * pairs are tested. `closed` controls whether the wrap-around edge from the
 * last vertex back to the first takes part; pass false while a ring is still
 * being drawn.
 */
export function ringSelfIntersects(ring: Point[], closed = true): boolean {
  const n = ring.length;
  const edges: [Point, Point][] = [];
  for (let i = 0; i + 1 < n; i++) edges.push([ring[i], ring[i + 1]]);
  if (closed && n >= 3) edges.push([ring[n - 1], ring[0]]);
  const m = edges.length;
  for (let i = 0; i < m; i++) {
    for (let j = i + 2; j < m; j++) {
      // the wrap edge is adjacent to edge 0 as well
      if (closed && i === 0 && j === m - 1) continue;
      if (segmentsIntersect(edges[i][0], edges[i][1], edges[j][0], edges[j][1])) {
        return true;
      }
    }
  }
  return false;
}

/** Even-odd point-in-ring test; boundary points count as inside. */
export function pointInRing(p: Point, ring: Point[]): boolean {
  let inside = false;
  const n = ring.length;
  for (let i = 0, j = n - 1; i < n; j = i++) {
    const [xi, yi] = ring[i];
    const [xj, yj] = ring[j];
    if (orient(ring[j], ring[i], p) === 0 && onSegment(ring[j], ring[i], p)) {
      return true;
    }
    if (yi > p[1] !== yj > p[1]) {
      const x = xi + ((p[1] - yi) / (yj - yi)) * (xj - xi);
      if (p[0] < x) inside = !inside;
    }
  }
  return inside;
}

/** Point-in-region over outer rings minus holes. */
export function pointInRegion(p: Point, rings: Point[][], holes: boolean[]): boolean {
  let inOuter = false;
  for (let i = 0; i < rings.length; i++) {
    if (!pointInRing(p, rings[i])) continue;
    if (holes[i]) return false;
    inOuter = true;
  }
  return inOuter;
}

export interface Bounds {
  minX: number;
  minY: number;
  maxX: number;
  maxY: number;
}

export function ringsBounds(rings: Point[][]): Bounds | null {
  let minX = Infinity;
  let minY = Infinity;
  let maxX = -Infinity;
  let maxY = -Infinity;
  for (const ring of rings) {
    for (const [x, y] of ring) {
      minX = Math.min(minX, x);
      minY = Math.min(minY, y);
      maxX = Math.max(maxX, x);
      maxY = Math.max(maxY, y);
    }
  }
  if (minX > maxX) return null;
  return { minX, minY, maxX, maxY };
}
