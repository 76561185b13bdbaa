import { ApiClient } from "./api.js";
import { el } from "./dom.js";
import { PickerPanel } from "./picker.js";
import { ResultsPanel } from "./results.js";
import { SketchPanel } from "./sketch.js";
import { QuerySession } from "./state.js";
import { VerbsPanel } from "./verbs.js";

function mount(root: HTMLElement): void {
  const api = new ApiClient("");
  const session = new QuerySession(api);

  const panels = {
    sketch: new SketchPanel(api, session),
    picker: new PickerPanel(api, session),
    verbs: new VerbsPanel(api, session),
  };
  const labels: Record<keyof typeof panels, string> = {
    sketch: "Sketch",
    picker: "Pick regions",
    verbs: "Verbs",
  };

  const tabBar = el("nav", { class: "tabs" });
  const buttons = new Map<keyof typeof panels, HTMLButtonElement>();

  function show(name: keyof typeof panels): void {
    for (const [key, panel] of Object.entries(panels)) {
      panel.el.classList.toggle("hidden", key !== name);
      buttons.get(key as keyof typeof panels)?.classList.toggle("on", key === name);
    }
  }

  for (const key of Object.keys(panels) as (keyof typeof panels)[]) {
    const btn = el("button", { class: "tab", type: "button" }, labels[key]);
    btn.addEventListener("click", () => show(key));
    buttons.set(key, btn);
    tabBar.append(btn);
  }

  const results = new ResultsPanel(session);
  root.append(
    el("header", { class: "masthead" }, el("h1", {}, "region relationship explorer"), tabBar),
    panels.sketch.el,
    panels.picker.el,
    panels.verbs.el,
    results.el,
  );
  show("sketch");
}

const root = document.getElementById("app");
if (root) mount(root);
