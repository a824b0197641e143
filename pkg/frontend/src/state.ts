// Console view state: a pure reducer over server messages.
//
// The console is stateless with respect to truth -- every fact shown comes
// from a server message (or the schema document the server published).
// Door state is derived from EVT facts alone: the server reports the state
// each interaction happened under, and an interaction with the schema's
// door item toggles the door right after it is recorded.

import { Phase, WireMessage } from "./protocol.js";

export interface CategoryInfo {
  count: number;
  layer: "external" | "internal";
  verb: string;
  interactable: boolean;
}

export interface PanelSchema {
  name: string;
  door_item: string;
  categories: Record<string, CategoryInfo>;
}

export interface PromptView {
  index: number;
  item: string;
  verb: string;
}

export interface EventView {
  item: string;
  verb: string;
  doorOpen: boolean;
  violation: boolean;
}

export interface Report {
  elapsedMs: number;
  accuracy: number;
}

export interface ConsoleState {
  connected: boolean;
  phase: Phase;
  sequence: string[] | null;
  prompt: PromptView | null;
  doorOpen: boolean;
  events: EventView[];
  report: Report | null;
  lastError: string | null;
}

export function initialState(): ConsoleState {
  return {
    connected: false,
    phase: "IDLE",
    sequence: null,
    prompt: null,
    doorOpen: false,
    events: [],
    report: null,
    lastError: null,
  };
}

export function itemName(category: string, index: number): string {
  return `${category}_${String(index).padStart(2, "0")}`;
}

export function itemsOf(schema: PanelSchema, layer?: "external" | "internal"): string[] {
  const order = ["G", "B", "H", "K", "T", "F", "S"];
  const out: string[] = [];
  for (const code of order) {
    const cat = schema.categories[code];
    if (!cat || (layer && cat.layer !== layer)) continue;
    for (let i = 0; i < cat.count; i++) out.push(itemName(code, i));
  }
  return out;
}

export function isInternal(schema: PanelSchema, item: string): boolean {
  const cat = schema.categories[item[0]];
  return !!cat && cat.layer === "internal";
}

export function isInteractable(schema: PanelSchema, item: string): boolean {
  const cat = schema.categories[item[0]];
  return !!cat && cat.interactable;
}

// "Awaiting GPT Response" covers the whole submit round trip: photo/OCR
// processing and the model call.
export function awaitingModel(state: ConsoleState): boolean {
  return state.phase === "CAPTURING" || state.phase === "AWAITING_GPT";
}

export function applyMessage(state: ConsoleState, msg: WireMessage, schema: PanelSchema): ConsoleState {
  switch (msg.kind) {
    case "STATE": {
      const next: ConsoleState = { ...state, phase: msg.phase, lastError: null };
      if (msg.phase === "CAPTURING" || msg.phase === "AWAITING_GPT") {
        // a fresh submission resets everything task-scoped
        next.sequence = null;
        next.prompt = null;
        next.doorOpen = false;
        next.events = [];
        next.report = null;
      }
      return next;
    }
    case "SEQ":
      return { ...state, sequence: [...msg.items] };
    case "PROMPT":
      return { ...state, prompt: { index: msg.index, item: msg.item, verb: msg.verb } };
    case "EVT": {
      const event: EventView = {
        item: msg.item,
        verb: msg.verb,
        doorOpen: msg.doorOpen,
        violation: msg.violation,
      };
      const toggled = msg.item === schema.door_item ? !msg.doorOpen : msg.doorOpen;
      return { ...state, events: [...state.events, event], doorOpen: toggled };
    }
    case "DONE":
      return { ...state, report: { elapsedMs: msg.elapsedMs, accuracy: msg.accuracy }, phase: "DONE" };
    case "ERR":
      return { ...state, lastError: `${msg.code} ${msg.reason}` };
    default:
      // client->server kinds never arrive here; ignore defensively
      return state;
  }
}

export function setConnected(state: ConsoleState, connected: boolean): ConsoleState {
  return { ...state, connected, lastError: connected ? state.lastError : "disconnected" };
}
