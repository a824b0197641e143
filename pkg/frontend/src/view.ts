// DOM rendering. The panel grid is generated from the schema (grid by
// category); all dynamic bits are class/text updates driven by the state
// reducer, so the view stays a dumb projection.

import {
  ConsoleState,
  PanelSchema,
  awaitingModel,
  isInteractable,
  itemName,
} from "./state.js";

export interface Handlers {
  onItemClick(item: string): void;
}

const CATEGORY_LABELS: Record<string, string> = {
  G: "Gauges",
  B: "Buttons",
  H: "Handle",
  K: "Knobs",
  T: "Toggles",
  F: "Fuses",
  S: "Sockets",
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function buildPanel(root: HTMLElement, schema: PanelSchema, handlers: Handlers): void {
  root.textContent = "";
  const external = el("div", "layer external-layer");
  external.appendChild(el("h3", "layer-title", "External panel"));
  const internal = el("div", "layer internal-layer");
  internal.appendChild(el("h3", "layer-title", "Internal compartment"));
  const shade = el("div", "door-shade", "door closed");
  shade.id = "door-shade";
  internal.appendChild(shade);

  for (const code of ["G", "B", "H", "K", "T", "F", "S"]) {
    const cat = schema.categories[code];
    if (!cat || cat.count === 0) continue;
    const group = el("div", "category");
    group.appendChild(el("h4", "category-title", `${CATEGORY_LABELS[code] ?? code} (${cat.verb})`));
    const grid = el("div", "item-grid");
    for (let i = 0; i < cat.count; i++) {
      const name = itemName(code, i);
      const button = el("button", "item", name);
      button.id = `item-${name}`;
      button.dataset.item = name;
      if (!isInteractable(schema, name)) {
        button.disabled = true;
        button.title = "display-only";
      } else {
        button.addEventListener("click", () => handlers.onItemClick(name));
      }
      grid.appendChild(button);
    }
    group.appendChild(grid);
    (cat.layer === "internal" ? internal : external).appendChild(group);
  }
  root.appendChild(external);
  root.appendChild(internal);
}

export function render(state: ConsoleState, schema: PanelSchema): void {
  const phase = document.getElementById("phase-badge")!;
  phase.textContent = state.phase;
  phase.className = `badge phase-${state.phase.toLowerCase()}`;

  const conn = document.getElementById("conn-badge")!;
  conn.textContent = state.connected ? "connected" : "disconnected";
  conn.className = `badge ${state.connected ? "conn-ok" : "conn-bad"}`;

  document.getElementById("awaiting")!.classList.toggle("visible", awaitingModel(state));

  // internal layer occluded whenever the door is closed
  document.getElementById("door-shade")!.classList.toggle("open", state.doorOpen);

  // highlighted item always equals the last PROMPT's item
  document.querySelectorAll(".item.highlight").forEach((node) => node.classList.remove("highlight"));
  const promptLine = document.getElementById("prompt-line")!;
  if (state.prompt && (state.phase === "READY" || state.phase === "RUNNING")) {
    promptLine.textContent = `step ${state.prompt.index + 1} of ${state.sequence?.length ?? "?"}: ${
      state.prompt.verb
    } ${state.prompt.item}`;
    document.getElementById(`item-${state.prompt.item}`)?.classList.add("highlight");
  } else if (state.phase === "DONE") {
    promptLine.textContent = "task complete";
  } else {
    promptLine.textContent = "no active step";
  }

  const seqLine = document.getElementById("seq-line")!;
  seqLine.textContent = state.sequence ? `${state.sequence.length} steps: ${state.sequence.join(", ")}` : "";

  const ticker = document.getElementById("ticker")!;
  ticker.textContent = "";
  for (const event of state.events.slice().reverse()) {
    const row = el("div", event.violation ? "evt violation" : "evt");
    const door = event.doorOpen ? "open" : "closed";
    row.textContent = `${event.verb} ${event.item} (door ${door})${event.violation ? " (gating violation)" : ""}`;
    ticker.appendChild(row);
  }

  const report = document.getElementById("report")!;
  if (state.report) {
    report.classList.add("visible");
    report.textContent = `Done in ${(state.report.elapsedMs / 1000).toFixed(1)} s, accuracy ${state.report.accuracy.toFixed(4)}`;
  } else {
    report.classList.remove("visible");
    report.textContent = "";
  }

  const banner = document.getElementById("error-banner")!;
  if (state.lastError) {
    banner.classList.add("visible");
    banner.textContent = state.lastError;
  } else {
    banner.classList.remove("visible");
    banner.textContent = "";
  }

  const running = state.phase === "READY" || state.phase === "RUNNING";
  (document.getElementById("btn-next") as HTMLButtonElement).disabled = !running;
  (document.getElementById("btn-prev") as HTMLButtonElement).disabled = !running;
  (document.getElementById("btn-door") as HTMLButtonElement).disabled = !running;
  (document.getElementById("btn-submit") as HTMLButtonElement).disabled = state.phase !== "IDLE";
  (document.getElementById("btn-capture") as HTMLButtonElement).disabled = state.phase !== "IDLE";
}
