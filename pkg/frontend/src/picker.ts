/**
 * Region picker: browse dataset images, click one region as the source and a
 * second region to choose the target label group, then query that pair by
 * its image key. The polygons in the /images payload are y-down wire
 * coordinates, so they render directly and can be resubmitted to /descriptor
 * unchanged when the pair is captured for verb saving or re-run as sc.
 */

import { ApiClient, ImageDetail, ImageRegion, Ring, SketchBody } from "./api.js";
import { clear, el, ringsToPath, svg } from "./dom.js";
import { QuerySession } from "./state.js";

const PAGE = 6;

export class PickerPanel {
  readonly el: HTMLElement;
  private api: ApiClient;
  private session: QuerySession;

  private offset = 0;
  private total = 0;
  private images: ImageDetail[] = [];

  private image: ImageDetail | null = null;
  private sourceId: string | null = null;
  private targetLabel: string | null = null;

  private gridEl: HTMLElement;
  private pagerEl: HTMLElement;
  private statusEl: HTMLElement;
  private queryButton: HTMLButtonElement;
  private topNInput: HTMLInputElement;
  private minAreaInput: HTMLInputElement;

  constructor(api: ApiClient, session: QuerySession) {
    this.api = api;
    this.session = session;
    this.el = el("section", { class: "panel picker-panel" });

    this.gridEl = el("div", { class: "image-grid" });
    this.pagerEl = el("div", { class: "toolbar" });
    this.statusEl = el("div", { class: "muted status" }, "Loading images…");

    this.topNInput = el("input", { type: "number", value: "20", min: "1", size: "4" });
    this.minAreaInput = el("input", {
      type: "number",
      value: "0.01",
      min: "0",
      step: "0.01",
      size: "5",
    });
    this.queryButton = el("button", { class: "primary", type: "button" }, "query pair");
    this.queryButton.disabled = true;
    this.queryButton.addEventListener("click", () => void this.query());

    this.el.append(
      el(
        "div",
        { class: "toolbar" },
        el("span", { class: "hint" }, "click a source region, then a region of the target label"),
        el("label", {}, "top n ", this.topNInput),
        el("label", {}, "min area ", this.minAreaInput),
        this.queryButton,
      ),
      this.statusEl,
      this.gridEl,
      this.pagerEl,
    );

    void this.load();
  }

  private async load(): Promise<void> {
    try {
      const page = await this.api.listImages(PAGE, this.offset);
      this.total = page.total;
      this.images = page.images;
      this.statusEl.textContent =
        page.total === 0 ? "The service has no dataset loaded." : "";
    } catch (e) {
      this.statusEl.textContent = e instanceof Error ? e.message : String(e);
      this.images = [];
      this.total = 0;
    }
    this.render();
  }

  private pick(img: ImageDetail, region: ImageRegion): void {
    if (this.image?.image_id !== img.image_id || this.sourceId === null) {
      this.image = img;
      this.sourceId = region.region_id;
      this.targetLabel = null;
    } else if (region.region_id === this.sourceId) {
      this.sourceId = null;
      this.targetLabel = null;
    } else {
      this.targetLabel = region.label;
    }
    this.render();
  }

  private selectionText(): string {
    if (!this.image || this.sourceId === null) {
      return "no pair selected";
    }
    const src = this.image.regions.find((r) => r.region_id === this.sourceId);
    const base = `source ${this.sourceId} (${src?.label ?? "?"}) in ${this.image.image_id}`;
    if (this.targetLabel === null) return `${base}; now pick a target region`;
    return `${base} → target label "${this.targetLabel}"`;
  }

  private regionClass(img: ImageDetail, region: ImageRegion): string {
    if (this.image?.image_id !== img.image_id) return "pick-region";
    if (region.region_id === this.sourceId) return "pick-region source";
    if (
      this.targetLabel !== null &&
      region.label === this.targetLabel &&
      region.region_id !== this.sourceId
    ) {
      return "pick-region target";
    }
    return "pick-region";
  }

  private imageCard(img: ImageDetail): HTMLElement {
    const card = el("article", { class: "image-card" });
    const view = svg("svg", {
      viewBox: `0 0 ${img.width} ${img.height}`,
      class: "pick-view",
      preserveAspectRatio: "xMidYMid meet",
    });
    view.append(
      svg("rect", {
        x: "0",
        y: "0",
        width: String(img.width),
        height: String(img.height),
        class: "thumb-frame",
      }),
    );
    for (const region of img.regions) {
      const path = svg("path", {
        d: ringsToPath(region.rings),
        class: this.regionClass(img, region),
        "fill-rule": "evenodd",
      });
      path.append(svg("title", {}, `${region.label} (${region.region_id})`));
      path.addEventListener("click", () => this.pick(img, region));
      view.append(path);
    }
    card.append(
      view,
      el(
        "div",
        { class: "card-title" },
        `${img.image_id} · ${img.regions.length} regions`,
      ),
    );
    return card;
  }

  private render(): void {
    clear(this.gridEl);
    for (const img of this.images) this.gridEl.append(this.imageCard(img));

    clear(this.pagerEl);
    const prev = el("button", { type: "button" }, "← prev");
    const next = el("button", { type: "button" }, "next →");
    prev.disabled = this.offset === 0;
    next.disabled = this.offset + PAGE >= this.total;
    prev.addEventListener("click", () => {
      this.offset = Math.max(0, this.offset - PAGE);
      void this.load();
    });
    next.addEventListener("click", () => {
      this.offset += PAGE;
      void this.load();
    });
    this.pagerEl.append(
      prev,
      el("span", { class: "muted" }, `${this.offset + 1}–${Math.min(this.offset + PAGE, this.total)} of ${this.total}`),
      next,
    );

    this.queryButton.disabled =
      this.image === null || this.sourceId === null || this.targetLabel === null;
    if (this.total > 0) this.statusEl.textContent = this.selectionText();
  }

  /** Wire polygons of the picked pair, for /descriptor submissions. */
  private pairSketch(kind: "raid" | "sc"): SketchBody | null {
    const img = this.image;
    if (!img || this.sourceId === null || this.targetLabel === null) return null;
    const src = img.regions.find((r) => r.region_id === this.sourceId);
    if (!src) return null;
    const targetRings: Ring[] = [];
    const targetHoles: boolean[] = [];
    for (const region of img.regions) {
      if (region.label !== this.targetLabel) continue;
      if (region.region_id === this.sourceId) continue;
      targetRings.push(...region.rings);
      targetHoles.push(...region.holes);
    }
    if (targetRings.length === 0) return null;
    return {
      source: src.rings,
      source_holes: src.holes,
      target: targetRings,
      target_holes: targetHoles,
      width: img.width,
      height: img.height,
      kind,
    };
  }

  private async query(): Promise<void> {
    const img = this.image;
    if (!img || this.sourceId === null || this.targetLabel === null) return;
    const body = {
      image_id: img.image_id,
      source_region_id: this.sourceId,
      target_label: this.targetLabel,
      top_n: Number(this.topNInput.value) || 20,
      min_area_fraction: Number(this.minAreaInput.value) || 0,
    };
    const describedAs = `${img.image_id}: ${this.sourceId} → ${this.targetLabel}`;
    this.session.kindRunner = (k) => {
      const sketch = this.pairSketch(k);
      if (!sketch) return Promise.resolve(null);
      const { top_n, min_area_fraction } = body;
      return this.session.runSketchQuery(
        sketch,
        { top_n, min_area_fraction },
        `${describedAs} (${k})`,
      );
    };
    try {
      const state = await this.session.runQuery(body, describedAs);
      if (state) await this.captureDescriptor();
    } catch (e) {
      this.statusEl.textContent = e instanceof Error ? e.message : String(e);
    }
  }

  /**
   * Fetch the descriptor of the picked pair so it can be saved as a verb.
   * Key queries resolve their descriptor server-side; this mirrors it from
   * the same wire polygons.
   */
  private async captureDescriptor(): Promise<void> {
    const sketch = this.pairSketch(this.session.kind);
    if (!sketch) return;
    try {
      this.session.descriptor = await this.api.computeDescriptor(sketch);
    } catch {
      this.session.descriptor = null;
    }
  }
}
