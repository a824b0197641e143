// Bootstrap: fetch the schema from the server's static endpoint, open the
// WebSocket bridge, and keep the view in sync with the reducer. The server
// publishes WS on (http port - 1); override with ?ws=ws://host:port/.

import { encodeMessage, parseWireLine, WireError } from "./protocol.js";
import {
  ConsoleState,
  PanelSchema,
  applyMessage,
  initialState,
  setConnected,
} from "./state.js";
import { buildPanel, render, Handlers } from "./view.js";

let state: ConsoleState = initialState();
let schema: PanelSchema;
let socket: WebSocket | null = null;

function wsUrl(): string {
  const params = new URLSearchParams(location.search);
  const override = params.get("ws");
  if (override) return override;
  const port = Number(location.port || "9002") - 1;
  return `ws://${location.hostname}:${port}/`;
}

function send(line: string): void {
  if (socket && socket.readyState === WebSocket.OPEN) {
    socket.send(line);
  } else {
    state = { ...state, lastError: "not connected" };
    render(state, schema);
  }
}

function connect(): void {
  socket = new WebSocket(wsUrl());
  socket.onopen = () => {
    state = setConnected(initialState(), true);
    send(encodeMessage({ kind: "HELLO", role: `console-${Date.now()}` }));
    render(state, schema);
  };
  socket.onmessage = (frame) => {
    try {
      state = applyMessage(state, parseWireLine(String(frame.data)), schema);
    } catch (exc) {
      if (!(exc instanceof WireError)) throw exc;
      state = { ...state, lastError: `unparseable server line: ${frame.data}` };
    }
    render(state, schema);
  };
  socket.onclose = () => {
    state = setConnected(state, false);
    render(state, schema);
  };
  socket.onerror = () => {
    state = setConnected(state, false);
    render(state, schema);
  };
}

const handlers: Handlers = {
  onItemClick(item: string): void {
    send(encodeMessage({ kind: "ACT", item }));
  },
};

async function boot(): Promise<void> {
  schema = (await (await fetch("/schema.json")).json()) as PanelSchema;
  document.getElementById("panel-name")!.textContent = schema.name;
  buildPanel(document.getElementById("panel")!, schema, handlers);

  try {
    const fixtures = (await (await fetch("/fixtures.json")).json()) as string[];
    const list = document.getElementById("fixture-options")!;
    for (const id of fixtures) {
      const option = document.createElement("option");
      option.value = id;
      list.appendChild(option);
    }
  } catch {
    // fixture listing is a convenience; the input still works without it
  }

  document.getElementById("btn-submit")!.addEventListener("click", () => {
    const input = document.getElementById("fixture-id") as HTMLInputElement;
    const docId = input.value.trim();
    if (!docId) {
      state = { ...state, lastError: "enter an instruction document id" };
      render(state, schema);
      return; // client-side validation: nothing is sent for an empty id
    }
    send(encodeMessage({ kind: "TEXT", docId }));
  });

  document.getElementById("btn-capture")!.addEventListener("click", () => {
    const input = document.getElementById("capture-path") as HTMLInputElement;
    const path = input.value.trim();
    if (!path) {
      state = { ...state, lastError: "enter a server-side image path to capture" };
      render(state, schema);
      return;
    }
    send(encodeMessage({ kind: "CAPTURE", path }));
  });

  document.getElementById("btn-next")!.addEventListener("click", () => send("NEXT"));
  document.getElementById("btn-prev")!.addEventListener("click", () => send("PREV"));
  document.getElementById("btn-door")!.addEventListener("click", () => {
    send(encodeMessage({ kind: "ACT", item: schema.door_item }));
  });
  document.getElementById("btn-reconnect")!.addEventListener("click", () => {
    socket?.close();
    connect();
  });

  render(state, schema);
  connect();
}

boot().catch((exc) => {
  document.body.textContent = `console failed to start: ${exc}`;
});
