/**
 * Verb manager: name the descriptor behind the latest query, browse saved
 * verbs, and compose "label + verb + label" sentence queries against the
 * index. Saving posts the descriptor values exactly as the service returned
 * them, so a verb saved here matches one saved from the same pair anywhere
 * else.
 */

import { ApiClient, ApiError } from "./api.js";
import { clear, el } from "./dom.js";
import { QuerySession } from "./state.js";

export class VerbsPanel {
  readonly el: HTMLElement;
  private api: ApiClient;
  private session: QuerySession;

  private listEl: HTMLElement;
  private detailEl: HTMLElement;
  private saveStatusEl: HTMLElement;
  private nameInput: HTMLInputElement;
  private saveButton: HTMLButtonElement;
  private verbSelect: HTMLSelectElement;
  private sourceLabelInput: HTMLInputElement;
  private targetLabelInput: HTMLInputElement;
  private topNInput: HTMLInputElement;

  constructor(api: ApiClient, session: QuerySession) {
    this.api = api;
    this.session = session;
    this.el = el("section", { class: "panel verbs-panel" });

    this.nameInput = el("input", { placeholder: "verb name", size: "16" });
    this.saveButton = el("button", { class: "primary", type: "button" }, "save current descriptor");
    this.saveButton.addEventListener("click", () => void this.save());
    this.saveStatusEl = el("span", { class: "muted" });

    this.listEl = el("div", { class: "verb-list" });
    this.detailEl = el("div", { class: "verb-detail" });

    this.verbSelect = el("select", {});
    this.sourceLabelInput = el("input", { placeholder: "any source label", size: "14" });
    this.targetLabelInput = el("input", { placeholder: "any target label", size: "14" });
    this.topNInput = el("input", { type: "number", value: "20", min: "1", size: "4" });
    const runButton = el("button", { class: "primary", type: "button" }, "run sentence");
    runButton.addEventListener("click", () => void this.runSentence());

    this.el.append(
      el("h3", {}, "save"),
      el(
        "div",
        { class: "toolbar" },
        this.nameInput,
        this.saveButton,
        this.saveStatusEl,
      ),
      el("h3", {}, "saved verbs"),
      this.listEl,
      this.detailEl,
      el("h3", {}, "sentence query"),
      el(
        "div",
        { class: "toolbar sentence" },
        this.sourceLabelInput,
        this.verbSelect,
        this.targetLabelInput,
        el("label", {}, "top n ", this.topNInput),
        runButton,
      ),
    );

    this.session.onChange(() => this.refreshSaveButton());
    this.refreshSaveButton();
    void this.refresh();
  }

  private refreshSaveButton(): void {
    const d = this.session.descriptor;
    this.saveButton.disabled = d === null;
    this.saveButton.title = d
      ? `${d.kind} descriptor, r_max ${d.r_max}`
      : "run a sketch or picker query first";
  }

  private async refresh(): Promise<void> {
    let names: string[] = [];
    try {
      names = (await this.api.listVerbs()).verbs;
    } catch (e) {
      clear(this.listEl);
      this.listEl.append(
        el("span", { class: "muted" }, e instanceof Error ? e.message : String(e)),
      );
      return;
    }
    clear(this.listEl);
    clear(this.verbSelect);
    if (names.length === 0) {
      this.listEl.append(el("span", { class: "muted" }, "no verbs saved yet"));
    }
    for (const name of names) {
      const chip = el("button", { class: "chip", type: "button" }, name);
      chip.addEventListener("click", () => void this.showDetail(name));
      this.listEl.append(chip);
      this.verbSelect.append(el("option", { value: name }, name));
    }
  }

  private async showDetail(name: string): Promise<void> {
    clear(this.detailEl);
    try {
      const verb = await this.api.getVerb(name);
      this.detailEl.append(
        el(
          "p",
          {},
          el("strong", {}, verb.name),
          ` · ${verb.descriptor.kind}, ${verb.descriptor.values.length} values, r_max ${verb.descriptor.r_max}`,
          verb.created_from ? ` · from ${verb.created_from}` : "",
        ),
      );
      this.verbSelect.value = name;
    } catch (e) {
      this.detailEl.append(
        el("p", { class: "error" }, e instanceof Error ? e.message : String(e)),
      );
    }
  }

  private async save(): Promise<void> {
    const descriptor = this.session.descriptor;
    const name = this.nameInput.value.trim();
    if (!descriptor || !name) {
      this.saveStatusEl.textContent = name ? "no descriptor to save" : "name the verb first";
      return;
    }
    const createdFrom = this.session.current?.describedAs ?? "sketch";
    try {
      const saved = await this.api.saveVerb(name, descriptor, createdFrom);
      this.saveStatusEl.textContent = `saved "${saved.name}"`;
      this.nameInput.value = "";
      await this.refresh();
      await this.showDetail(saved.name);
    } catch (e) {
      if (e instanceof ApiError && e.code === "conflict") {
        this.saveStatusEl.textContent = `"${name}" already exists; pick another name`;
      } else {
        this.saveStatusEl.textContent = e instanceof Error ? e.message : String(e);
      }
    }
  }

  private async runSentence(): Promise<void> {
    const verb = this.verbSelect.value;
    if (!verb) {
      this.saveStatusEl.textContent = "save a verb before running a sentence";
      return;
    }
    const source = this.sourceLabelInput.value.trim();
    const target = this.targetLabelInput.value.trim();
    const body = {
      verb,
      source_label: source || undefined,
      target_label: target || undefined,
      top_n: Number(this.topNInput.value) || 20,
    };
    const sentence = `"${source || "anything"} ${verb} ${target || "anything"}"`;
    // a verb's descriptor kind is fixed at save time, so no kind switch here
    this.session.kindRunner = null;
    try {
      await this.session.runQuery(body, sentence);
    } catch {
      // session.lastError is rendered by the results panel
    }
  }
}
