/** Tiny DOM/SVG builders so panels stay dependency-free. */

import { Ring } from "./api.js";

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  node.append(...children);
  return node;
}

const SVG_NS = "http://www.w3.org/2000/svg";

export function svg(
  tag: string,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): SVGElement {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  node.append(...children);
  return node;
}

/**
 * One SVG path covering all rings; with fill-rule evenodd the hole rings
 * punch out of the outers without any client-side geometry.
 */
export function ringsToPath(rings: Ring[]): string {
  const parts: string[] = [];
  for (const ring of rings) {
    if (ring.length === 0) continue;
    const [x0, y0] = ring[0];
    let d = `M${x0} ${y0}`;
    for (let i = 1; i < ring.length; i++) {
      d += `L${ring[i][0]} ${ring[i][1]}`;
    }
    parts.push(d + "Z");
  }
  return parts.join("");
}

export function clear(node: HTMLElement): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}
