/**
 * Ranked-results browser: outline thumbnails, distances, relevance toggles,
 * and the live precision@n curve.
 *
 * Outlines are drawn client-side from the polygon data in the query response
 * (already y-down, so wire coordinates map straight onto the SVG viewBox).
 * Distances and precision values are rendered exactly as the service sent
 * them; the panel never computes a statistic itself.
 */

import { PrecisionPoint, QueryResult } from "./api.js";
import { clear, el, ringsToPath, svg } from "./dom.js";
import { QuerySession, resultKey } from "./state.js";

function thumbnail(r: QueryResult): SVGElement {
  const w = r.width ?? 100;
  const h = r.height ?? 100;
  const view = svg("svg", {
    viewBox: `0 0 ${w} ${h}`,
    class: "thumb",
    preserveAspectRatio: "xMidYMid meet",
  });
  view.append(
    svg("rect", {
      x: "0",
      y: "0",
      width: String(w),
      height: String(h),
      class: "thumb-frame",
    }),
  );
  if (r.target_outline) {
    view.append(
      svg("path", {
        d: ringsToPath(r.target_outline.rings),
        class: "outline target",
        "fill-rule": "evenodd",
      }),
    );
  }
  if (r.source_outline) {
    view.append(
      svg("path", {
        d: ringsToPath(r.source_outline.rings),
        class: "outline source",
        "fill-rule": "evenodd",
      }),
    );
  }
  return view;
}

function precisionSvg(points: PrecisionPoint[]): SVGElement {
  const width = 380;
  const height = 130;
  const left = 34;
  const right = width - 12;
  const top = 12;
  const bottom = height - 24;
  const maxN = Math.max(...points.map((p) => p.n), 1);
  const x = (n: number) =>
    maxN === 1 ? (left + right) / 2 : left + ((n - 1) / (maxN - 1)) * (right - left);
  const y = (p: number) => bottom - p * (bottom - top);

  const plot = svg("svg", {
    viewBox: `0 0 ${width} ${height}`,
    class: "precision-plot",
  });
  plot.append(
    svg("line", { x1: String(left), y1: String(top), x2: String(left), y2: String(bottom), class: "axis" }),
    svg("line", { x1: String(left), y1: String(bottom), x2: String(right), y2: String(bottom), class: "axis" }),
    svg("text", { x: String(left - 6), y: String(top + 4), class: "tick", "text-anchor": "end" }, "1"),
    svg("text", { x: String(left - 6), y: String(bottom + 4), class: "tick", "text-anchor": "end" }, "0"),
    svg("text", { x: String((left + right) / 2), y: String(height - 6), class: "tick", "text-anchor": "middle" }, "n"),
  );
  if (points.length > 1) {
    plot.append(
      svg("polyline", {
        points: points.map((p) => `${x(p.n)},${y(p.precision)}`).join(" "),
        class: "curve",
      }),
    );
  }
  for (const p of points) {
    const dot = svg("circle", {
      cx: String(x(p.n)),
      cy: String(y(p.precision)),
      r: "3.5",
      class: "dot",
    });
    dot.append(svg("title", {}, `precision@${p.n} = ${p.precision}`));
    plot.append(dot);
  }
  return plot;
}

export class ResultsPanel {
  readonly el: HTMLElement;
  private session: QuerySession;

  constructor(session: QuerySession) {
    this.session = session;
    this.el = el("section", { class: "results-panel" });
    session.onChange(() => this.render());
    this.render();
  }

  private header(): HTMLElement {
    const s = this.session;
    const head = el("div", { class: "results-head" });
    const title = s.current
      ? `Results for ${s.current.describedAs}`
      : "Results";
    head.append(el("h2", {}, title));
    if (s.current) {
      head.append(
        el(
          "span",
          { class: "muted", title: s.current.queryId },
          `${s.current.results.length} results · query ${s.current.queryId.slice(0, 8)}`,
        ),
      );
      if (s.descriptor) {
        head.append(
          el(
            "span",
            { class: "muted" },
            `descriptor ${s.descriptor.kind} · r_max ${s.descriptor.r_max}`,
          ),
        );
      }
    }
    const switcher = el("div", { class: "kind-switch" });
    for (const kind of ["raid", "sc"] as const) {
      const btn = el(
        "button",
        { class: s.kind === kind ? "seg on" : "seg", type: "button" },
        kind,
      );
      btn.disabled = !s.kindRunner || s.busy;
      btn.addEventListener("click", () => {
        s.rerunWithKind(kind).catch(() => {
          /* surfaced through session.lastError */
        });
      });
      switcher.append(btn);
    }
    head.append(switcher);
    if (s.busy) head.append(el("span", { class: "busy" }, "querying…"));
    if (s.lastError) head.append(el("span", { class: "error" }, s.lastError));
    return head;
  }

  private precisionBlock(): HTMLElement {
    const state = this.session.current;
    const block = el("div", { class: "precision" });
    block.append(el("h3", {}, "precision@n"));
    if (!state || state.precision.length === 0) {
      block.append(
        el(
          "p",
          { class: "muted" },
          "Mark results from the top of the ranking to grow the curve.",
        ),
      );
      return block;
    }
    block.append(precisionSvg(state.precision));
    const itemized = state.precision
      .map((p) => `p@${p.n} = ${p.precision}`)
      .join("   ");
    block.append(el("p", { class: "precision-values" }, itemized));
    return block;
  }

  private card(r: QueryResult, rank: number): HTMLElement {
    const s = this.session;
    const mark = s.current?.feedback.get(resultKey(r));
    const card = el("article", { class: "card" });
    card.append(thumbnail(r));
    card.append(
      el(
        "div",
        { class: "card-title" },
        `#${rank} · ${r.image_id}`,
      ),
      el(
        "div",
        { class: "card-line" },
        `${r.source_label} → ${r.target_label}`,
      ),
      el(
        "div",
        { class: "card-line", title: String(r.distance) },
        `distance ${r.distance}`,
      ),
    );
    const buttons = el("div", { class: "card-buttons" });
    const yes = el(
      "button",
      { class: mark === true ? "vote on" : "vote", type: "button" },
      "✓ relevant",
    );
    const no = el(
      "button",
      { class: mark === false ? "vote on bad" : "vote", type: "button" },
      "✗ irrelevant",
    );
    yes.addEventListener("click", () => this.mark(r, true));
    no.addEventListener("click", () => this.mark(r, false));
    buttons.append(yes, no);
    card.append(buttons);
    return card;
  }

  private mark(r: QueryResult, relevant: boolean): void {
    this.session.mark(r, relevant).catch((e: unknown) => {
      this.session.lastError = e instanceof Error ? e.message : String(e);
      this.render();
    });
  }

  private render(): void {
    clear(this.el);
    this.el.append(this.header());
    const state = this.session.current;
    if (!state) {
      this.el.append(
        el(
          "p",
          { class: "muted" },
          "Run a query from the sketch, picker, or verbs tab to see ranked results here.",
        ),
      );
      return;
    }
    this.el.append(this.precisionBlock());
    const grid = el("div", { class: "card-grid" });
    state.results.forEach((r, i) => grid.append(this.card(r, i + 1)));
    if (state.results.length === 0) {
      grid.append(el("p", { class: "muted" }, "No results matched the filters."));
    }
    this.el.append(grid);
  }
}
