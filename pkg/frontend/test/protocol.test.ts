import { describe, expect, it } from "vitest";

import {
  WireError,
  WireMessage,
  encodeMessage,
  escapeText,
  parseWireLine,
  unescapeText,
} from "../src/protocol.js";

describe("wire grammar", () => {
  it("parses the server lines the guidance flow emits", () => {
    expect(parseWireLine("STATE AWAITING_GPT")).toEqual({ kind: "STATE", phase: "AWAITING_GPT" });
    expect(parseWireLine("SEQ H_00,S_02,T_01,H_00,B_01,K_02,B_02,T_02")).toEqual({
      kind: "SEQ",
      items: ["H_00", "S_02", "T_01", "H_00", "B_01", "K_02", "B_02", "T_02"],
    });
    expect(parseWireLine("PROMPT 0 H_00 turn")).toEqual({
      kind: "PROMPT",
      index: 0,
      item: "H_00",
      verb: "turn",
    });
    expect(parseWireLine("EVT S_02 unplug door=closed violation=true")).toEqual({
      kind: "EVT",
      item: "S_02",
      verb: "unplug",
      doorOpen: false,
      violation: true,
    });
    expect(parseWireLine("DONE 160600 1.0000")).toEqual({ kind: "DONE", elapsedMs: 160600, accuracy: 1.0 });
    expect(parseWireLine("ERR 409 wrong-phase")).toEqual({ kind: "ERR", code: 409, reason: "wrong-phase" });
  });

  it("tolerates trailing newlines", () => {
    expect(parseWireLine("NEXT\n")).toEqual({ kind: "NEXT" });
    expect(parseWireLine("STATE READY\r\n")).toEqual({ kind: "STATE", phase: "READY" });
  });

  it("encodes client messages bit-exactly", () => {
    expect(encodeMessage({ kind: "HELLO", role: "console" })).toBe("HELLO console");
    expect(encodeMessage({ kind: "TEXT", docId: "pump" })).toBe("TEXT pump");
    expect(encodeMessage({ kind: "ACT", item: "B_04" })).toBe("ACT B_04");
    expect(encodeMessage({ kind: "NEXT" })).toBe("NEXT");
    expect(encodeMessage({ kind: "CAPTURE", path: "/tmp/a b.png" })).toBe("CAPTURE /tmp/a b.png");
  });

  it("round-trips random valid messages", () => {
    const verbs = ["read", "press", "turn", "flip", "replace", "unplug"];
    const item = () =>
      `${"GBHKTFS"[Math.floor(Math.random() * 7)]}_${String(Math.floor(Math.random() * 100)).padStart(2, "0")}`;
    for (let i = 0; i < 2000; i++) {
      const pick = Math.floor(Math.random() * 6);
      const msg: WireMessage =
        pick === 0
          ? { kind: "SEQ", items: Array.from({ length: 1 + (i % 8) }, item) }
          : pick === 1
            ? { kind: "PROMPT", index: i % 64, item: item(), verb: verbs[i % verbs.length] }
            : pick === 2
              ? { kind: "EVT", item: item(), verb: verbs[i % verbs.length], doorOpen: i % 2 === 0, violation: i % 3 === 0 }
              : pick === 3
                ? { kind: "DONE", elapsedMs: i * 17, accuracy: Number((Math.random()).toFixed(4)) }
                : pick === 4
                  ? { kind: "ERR", code: 400 + (i % 3), reason: `reason-${i}\nsecond line` }
                  : { kind: "ACT", item: item() };
      expect(parseWireLine(encodeMessage(msg))).toEqual(msg);
    }
  });

  it("escapes embedded newlines so a message is one line", () => {
    const line = encodeMessage({ kind: "ERR", code: 502, reason: "a\nb\\c\r" });
    expect(line.includes("\n")).toBe(false);
    expect(parseWireLine(line)).toEqual({ kind: "ERR", code: 502, reason: "a\nb\\c\r" });
    expect(unescapeText(escapeText("x\\n\ny"))).toBe("x\\n\ny");
  });

  it("rejects malformed lines", () => {
    for (const bad of [
      "",
      "   ",
      "BOGUS x",
      "NEXT extra",
      "ACT nope",
      "STATE NOT_A_PHASE",
      "SEQ",
      "PROMPT x B_00 press",
      "EVT B_00 press door=ajar violation=true",
      "DONE abc 1.0",
      "DONE 10 1.5",
      "ERR nope reason",
      "HELLO two words",
    ]) {
      expect(() => parseWireLine(bad)).toThrow(WireError);
    }
  });
});
