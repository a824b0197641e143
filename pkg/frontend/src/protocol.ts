// Wire grammar shared with the guidance server: one UTF-8 line per message
// over TCP, one message per WebSocket text frame (no trailing newline).
// This module is the console's single source of message truth; the view
// never touches raw lines.

export type Phase =
  | "IDLE"
  | "CAPTURING"
  | "AWAITING_GPT"
  | "READY"
  | "RUNNING"
  | "DONE"
  | "FAILED";

export const PHASES: readonly Phase[] = [
  "IDLE",
  "CAPTURING",
  "AWAITING_GPT",
  "READY",
  "RUNNING",
  "DONE",
  "FAILED",
];

export type WireMessage =
  | { kind: "HELLO"; role: string }
  | { kind: "TEXT"; docId: string }
  | { kind: "CAPTURE"; path: string }
  | { kind: "NEXT" }
  | { kind: "PREV" }
  | { kind: "ACT"; item: string }
  | { kind: "STATE"; phase: Phase }
  | { kind: "SEQ"; items: string[] }
  | { kind: "PROMPT"; index: number; item: string; verb: string }
  | { kind: "EVT"; item: string; verb: string; doorOpen: boolean; violation: boolean }
  | { kind: "DONE"; elapsedMs: number; accuracy: number }
  | { kind: "ERR"; code: number; reason: string };

const ITEM_RE = /^[A-Z]_[0-9]{2}$/;
const VERB_RE = /^[a-z]+$/;
const TOKEN_RE = /^\S+$/;

export class WireError extends Error {}

export function escapeText(text: string): string {
  return text.replace(/\\/g, "\\\\").replace(/\n/g, "\\n").replace(/\r/g, "\\r");
}

export function unescapeText(text: string): string {
  let out = "";
  for (let i = 0; i < text.length; i++) {
    if (text[i] === "\\" && i + 1 < text.length) {
      const next = text[i + 1];
      if (next === "n") {
        out += "\n";
        i++;
        continue;
      }
      if (next === "r") {
        out += "\r";
        i++;
        continue;
      }
      if (next === "\\") {
        out += "\\";
        i++;
        continue;
      }
    }
    out += text[i];
  }
  return out;
}

function requireItem(value: string, what: string): string {
  if (!ITEM_RE.test(value)) throw new WireError(`${what} must look like B_04, got ${value}`);
  return value;
}

export function parseWireLine(line: string): WireMessage {
  const body = line.replace(/[\r\n]+$/, "");
  if (!body.trim()) throw new WireError("empty line");
  const space = body.indexOf(" ");
  const kind = space === -1 ? body : body.slice(0, space);
  const rest = space === -1 ? "" : body.slice(space + 1);

  switch (kind) {
    case "NEXT":
    case "PREV":
      if (rest) throw new WireError(`${kind} takes no payload`);
      return { kind };
    case "HELLO":
      if (!TOKEN_RE.test(rest)) throw new WireError("role must be a single token");
      return { kind, role: rest };
    case "TEXT":
      if (!TOKEN_RE.test(rest)) throw new WireError("doc id must be a single token");
      return { kind, docId: rest };
    case "CAPTURE":
      if (!rest) throw new WireError("CAPTURE needs an image path");
      return { kind, path: unescapeText(rest) };
    case "ACT":
      return { kind, item: requireItem(rest, "item") };
    case "STATE":
      if (!(PHASES as readonly string[]).includes(rest)) throw new WireError(`unknown phase ${rest}`);
      return { kind, phase: rest as Phase };
    case "SEQ": {
      const items = rest ? rest.split(",") : [];
      if (!items.length) throw new WireError("SEQ needs at least one item");
      items.forEach((it) => requireItem(it, "sequence item"));
      return { kind, items };
    }
    case "PROMPT": {
      const parts = rest.split(" ");
      if (parts.length !== 3) throw new WireError("PROMPT needs index, item, verb");
      const [idx, item, verb] = parts;
      if (!/^[0-9]+$/.test(idx)) throw new WireError("prompt index must be a non-negative integer");
      requireItem(item, "item");
      if (!VERB_RE.test(verb)) throw new WireError("verb must be lowercase letters");
      return { kind, index: parseInt(idx, 10), item, verb };
    }
    case "EVT": {
      const parts = rest.split(" ");
      if (parts.length !== 4) throw new WireError("EVT needs item, verb, door=, violation=");
      const [item, verb, door, violation] = parts;
      requireItem(item, "item");
      if (!VERB_RE.test(verb)) throw new WireError("verb must be lowercase letters");
      if (door !== "door=open" && door !== "door=closed") throw new WireError(`bad door field ${door}`);
      if (violation !== "violation=true" && violation !== "violation=false")
        throw new WireError(`bad violation field ${violation}`);
      return {
        kind,
        item,
        verb,
        doorOpen: door === "door=open",
        violation: violation === "violation=true",
      };
    }
    case "DONE": {
      const parts = rest.split(" ");
      if (parts.length !== 2) throw new WireError("DONE needs elapsed-ms and accuracy");
      const [ms, acc] = parts;
      if (!/^[0-9]+$/.test(ms)) throw new WireError("elapsed-ms must be a non-negative integer");
      const accuracy = Number(acc);
      if (!Number.isFinite(accuracy) || accuracy < 0 || accuracy > 1)
        throw new WireError(`accuracy must be within [0,1], got ${acc}`);
      return { kind, elapsedMs: parseInt(ms, 10), accuracy };
    }
    case "ERR": {
      const sp = rest.indexOf(" ");
      const code = sp === -1 ? rest : rest.slice(0, sp);
      const reason = sp === -1 ? "" : rest.slice(sp + 1);
      if (!/^[0-9]+$/.test(code)) throw new WireError("error code must be an integer");
      return { kind, code: parseInt(code, 10), reason: unescapeText(reason) };
    }
    default:
      throw new WireError(`unknown message kind ${kind}`);
  }
}

export function encodeMessage(msg: WireMessage): string {
  switch (msg.kind) {
    case "NEXT":
    case "PREV":
      return msg.kind;
    case "HELLO":
      return `HELLO ${msg.role}`;
    case "TEXT":
      return `TEXT ${msg.docId}`;
    case "CAPTURE":
      return `CAPTURE ${escapeText(msg.path)}`;
    case "ACT":
      return `ACT ${msg.item}`;
    case "STATE":
      return `STATE ${msg.phase}`;
    case "SEQ":
      return `SEQ ${msg.items.join(",")}`;
    case "PROMPT":
      return `PROMPT ${msg.index} ${msg.item} ${msg.verb}`;
    case "EVT":
      return `EVT ${msg.item} ${msg.verb} door=${msg.doorOpen ? "open" : "closed"} violation=${
        msg.violation ? "true" : "false"
      }`;
    case "DONE":
      return `DONE ${msg.elapsedMs} ${msg.accuracy.toFixed(4)}`;
    case "ERR":
      return `ERR ${msg.code} ${escapeText(msg.reason)}`;
  }
}
