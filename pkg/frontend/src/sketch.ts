/**
 * Sketch editor: draw source (orange) and target (blue) polygon sets on a
 * blank canvas or over a dataset image's outlines, then submit them as a
 * query. Clicks add vertices in canvas pixels, which are already y-down
 * screen coordinates, so they go over the wire untouched.
 *
 * Self-intersection checks run locally purely as pre-submission warnings;
 * the service still accepts and repairs such rings, so submission stays
 * enabled.
 */

import { ApiClient, ImageDetail, QueryBody, SketchBody } from "./api.js";
import { clear, el } from "./dom.js";
import { Point, ringSelfIntersects } from "./geometry.js";
import { QuerySession } from "./state.js";

const WIDTH = 640;
const HEIGHT = 520;

const COLORS = {
  source: { stroke: "#e8801a", fill: "rgba(232, 128, 26, 0.22)" },
  target: { stroke: "#2a6fd6", fill: "rgba(42, 111, 214, 0.22)" },
};

type SetName = "source" | "target";

export class SketchPanel {
  readonly el: HTMLElement;
  private api: ApiClient;
  private session: QuerySession;

  private rings: Record<SetName, Point[][]> = { source: [], target: [] };
  private open: Point[] = [];
  private active: SetName = "source";
  private underlay: ImageDetail | null = null;

  private canvas: HTMLCanvasElement;
  private warningsEl: HTMLElement;
  private statusEl: HTMLElement;
  private setButtons: Record<SetName, HTMLButtonElement>;
  private runButton: HTMLButtonElement;
  private kindSelect: HTMLSelectElement;
  private underlaySelect: HTMLSelectElement;
  private sourceLabelInput: HTMLInputElement;
  private targetLabelInput: HTMLInputElement;
  private topNInput: HTMLInputElement;
  private minAreaInput: HTMLInputElement;

  constructor(api: ApiClient, session: QuerySession) {
    this.api = api;
    this.session = session;
    this.el = el("section", { class: "panel sketch-panel" });

    this.canvas = el("canvas", { class: "sketch-canvas" });
    this.canvas.width = WIDTH;
    this.canvas.height = HEIGHT;
    this.canvas.addEventListener("click", (e) => this.addVertex(e));
    this.canvas.addEventListener("dblclick", (e) => {
      e.preventDefault();
      this.closeRing();
    });

    this.setButtons = {
      source: el("button", { class: "seg on", type: "button" }, "source"),
      target: el("button", { class: "seg", type: "button" }, "target"),
    };
    for (const name of ["source", "target"] as const) {
      this.setButtons[name].addEventListener("click", () => {
        this.closeRing();
        this.active = name;
        this.refreshControls();
      });
    }

    const closeBtn = el("button", { type: "button" }, "close ring");
    closeBtn.addEventListener("click", () => this.closeRing());
    const undoBtn = el("button", { type: "button" }, "undo");
    undoBtn.addEventListener("click", () => this.undo());
    const clearBtn = el("button", { type: "button" }, "clear");
    clearBtn.addEventListener("click", () => {
      this.rings = { source: [], target: [] };
      this.open = [];
      this.changed();
    });

    this.kindSelect = el("select", { class: "kind" });
    this.kindSelect.append(
      el("option", { value: "raid" }, "raid"),
      el("option", { value: "sc" }, "sc"),
    );

    this.underlaySelect = el("select", { class: "underlay" });
    this.underlaySelect.append(el("option", { value: "" }, "no underlay"));
    this.underlaySelect.addEventListener("change", () => this.loadUnderlay());

    this.sourceLabelInput = el("input", {
      placeholder: "source label filter",
      size: "14",
    });
    this.targetLabelInput = el("input", {
      placeholder: "target label filter",
      size: "14",
    });
    this.topNInput = el("input", { type: "number", value: "20", min: "1", size: "4" });
    this.minAreaInput = el("input", {
      type: "number",
      value: "0.01",
      min: "0",
      step: "0.01",
      size: "5",
    });

    this.runButton = el("button", { class: "primary", type: "button" }, "run query");
    this.runButton.addEventListener("click", () => {
      void this.run(this.kindSelect.value as "raid" | "sc");
    });

    this.warningsEl = el("div", { class: "warnings" });
    this.statusEl = el("div", { class: "muted status" });

    this.el.append(
      el(
        "div",
        { class: "toolbar" },
        this.setButtons.source,
        this.setButtons.target,
        closeBtn,
        undoBtn,
        clearBtn,
        el("label", {}, "trace over ", this.underlaySelect),
      ),
      this.canvas,
      this.warningsEl,
      el(
        "div",
        { class: "toolbar" },
        el("label", {}, "kind ", this.kindSelect),
        el("label", {}, "source ", this.sourceLabelInput),
        el("label", {}, "target ", this.targetLabelInput),
        el("label", {}, "top n ", this.topNInput),
        el("label", {}, "min area ", this.minAreaInput),
        this.runButton,
      ),
      this.statusEl,
    );

    void this.populateUnderlays();
    this.changed();
  }

  private canvasPoint(e: MouseEvent): Point {
    const rect = this.canvas.getBoundingClientRect();
    const x = ((e.clientX - rect.left) / rect.width) * WIDTH;
    const y = ((e.clientY - rect.top) / rect.height) * HEIGHT;
    return [Math.round(x * 10) / 10, Math.round(y * 10) / 10];
  }

  private addVertex(e: MouseEvent): void {
    this.open.push(this.canvasPoint(e));
    this.changed();
  }

  private closeRing(): void {
    if (this.open.length >= 3) {
      this.rings[this.active].push(this.open);
    }
    this.open = [];
    this.changed();
  }

  private undo(): void {
    if (this.open.length > 0) {
      this.open.pop();
    } else {
      const reopened = this.rings[this.active].pop();
      if (reopened) this.open = reopened;
    }
    this.changed();
  }

  private async populateUnderlays(): Promise<void> {
    try {
      const page = await this.api.listImages(100, 0);
      for (const img of page.images) {
        this.underlaySelect.append(
          el("option", { value: img.image_id }, img.image_id),
        );
      }
    } catch {
      // service without a dataset: sketching on a blank canvas still works
    }
  }

  private async loadUnderlay(): Promise<void> {
    const id = this.underlaySelect.value;
    if (!id) {
      this.underlay = null;
      this.draw();
      return;
    }
    try {
      this.underlay = await this.api.getImage(id);
    } catch (e) {
      this.statusEl.textContent =
        e instanceof Error ? e.message : String(e);
      this.underlay = null;
    }
    this.draw();
  }

  private changed(): void {
    this.draw();
    this.refreshControls();
    this.refreshWarnings();
  }

  private refreshControls(): void {
    for (const name of ["source", "target"] as const) {
      this.setButtons[name].className =
        this.active === name ? "seg on" : "seg";
    }
    this.runButton.disabled =
      this.rings.source.length === 0 || this.rings.target.length === 0;
  }

  private refreshWarnings(): void {
    const notes: string[] = [];
    for (const name of ["source", "target"] as const) {
      this.rings[name].forEach((ring, i) => {
        if (ringSelfIntersects(ring, true)) {
          notes.push(`${name} ring ${i + 1} crosses itself`);
        }
      });
    }
    if (this.open.length >= 3 && ringSelfIntersects(this.open, false)) {
      notes.push(`open ${this.active} ring crosses itself`);
    }
    clear(this.warningsEl);
    for (const note of notes) {
      this.warningsEl.append(el("span", { class: "warning" }, `⚠ ${note}`));
    }
  }

  private draw(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    ctx.clearRect(0, 0, WIDTH, HEIGHT);
    ctx.fillStyle = "#fcfcfa";
    ctx.fillRect(0, 0, WIDTH, HEIGHT);
    ctx.strokeStyle = "#eee6da";
    ctx.lineWidth = 1;
    for (let x = 40; x < WIDTH; x += 40) {
      ctx.beginPath();
      ctx.moveTo(x, 0);
      ctx.lineTo(x, HEIGHT);
      ctx.stroke();
    }
    for (let y = 40; y < HEIGHT; y += 40) {
      ctx.beginPath();
      ctx.moveTo(0, y);
      ctx.lineTo(WIDTH, y);
      ctx.stroke();
    }
    this.drawUnderlay(ctx);
    for (const name of ["source", "target"] as const) {
      for (const ring of this.rings[name]) {
        this.tracePath(ctx, ring, true);
        ctx.fillStyle = COLORS[name].fill;
        ctx.fill();
        ctx.strokeStyle = COLORS[name].stroke;
        ctx.lineWidth = 2;
        ctx.stroke();
      }
    }
    if (this.open.length > 0) {
      this.tracePath(ctx, this.open, false);
      ctx.strokeStyle = COLORS[this.active].stroke;
      ctx.lineWidth = 2;
      ctx.setLineDash([6, 4]);
      ctx.stroke();
      ctx.setLineDash([]);
      ctx.fillStyle = COLORS[this.active].stroke;
      for (const [x, y] of this.open) {
        ctx.beginPath();
        ctx.arc(x, y, 3, 0, Math.PI * 2);
        ctx.fill();
      }
    }
  }

  private drawUnderlay(ctx: CanvasRenderingContext2D): void {
    const img = this.underlay;
    if (!img) return;
    const scale = Math.min(WIDTH / img.width, HEIGHT / img.height);
    ctx.strokeStyle = "#c9c2b8";
    ctx.lineWidth = 1.5;
    for (const region of img.regions) {
      for (const ring of region.rings) {
        this.tracePath(
          ctx,
          ring.map(([x, y]) => [x * scale, y * scale] as Point),
          true,
        );
        ctx.stroke();
      }
    }
  }

  private tracePath(
    ctx: CanvasRenderingContext2D,
    ring: Point[],
    close: boolean,
  ): void {
    ctx.beginPath();
    ctx.moveTo(ring[0][0], ring[0][1]);
    for (let i = 1; i < ring.length; i++) ctx.lineTo(ring[i][0], ring[i][1]);
    if (close) ctx.closePath();
  }

  private async run(kind: "raid" | "sc"): Promise<void> {
    this.closeRing();
    if (this.runButton.disabled) return;
    const sketch: SketchBody = {
      source: this.rings.source.map((r) => r.map((p) => [...p] as Point)),
      target: this.rings.target.map((r) => r.map((p) => [...p] as Point)),
      width: WIDTH,
      height: HEIGHT,
      kind,
    };
    const extras: QueryBody = {
      top_n: Number(this.topNInput.value) || 20,
      min_area_fraction: Number(this.minAreaInput.value) || 0,
    };
    if (this.sourceLabelInput.value.trim()) {
      extras.source_label = this.sourceLabelInput.value.trim();
    }
    if (this.targetLabelInput.value.trim()) {
      extras.target_label = this.targetLabelInput.value.trim();
    }
    this.session.kind = kind;
    this.session.kindRunner = (k) => {
      this.kindSelect.value = k;
      return this.session.runSketchQuery({ ...sketch, kind: k }, extras, "sketch");
    };
    this.statusEl.textContent = "";
    try {
      await this.session.runSketchQuery(sketch, extras, "sketch");
    } catch (e) {
      this.statusEl.textContent = e instanceof Error ? e.message : String(e);
    }
  }
}
