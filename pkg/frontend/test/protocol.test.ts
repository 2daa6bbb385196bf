import { describe, expect, it } from "vitest";
import { encodeCommand, parseServerMessage } from "../src/protocol.js";

const FRAME = {
  type: "frame",
  t: 0.5,
  nodes: [
    [0, 0, 0],
    [0.001, 0, 0],
  ],
  magnet: { pos: [0, 0, -0.017], axis: [-1, 0, 0] },
  cargo: [],
  metrics: { kappa_max: 10, head_speed: 0.001, B_at_head: 0.02, rt_factor: 1.0 },
  paused: false,
  recording: false,
};

describe("parseServerMessage", () => {
  it("accepts a well-formed frame", () => {
    const msg = parseServerMessage(JSON.stringify(FRAME));
    expect(msg?.type).toBe("frame");
    if (msg?.type === "frame") {
      expect(msg.nodes.length).toBe(2);
      expect(msg.magnet.axis).toEqual([-1, 0, 0]);
    }
  });

  it("renders a 41-node frame as 41 points", () => {
    const nodes = Array.from({ length: 41 }, (_, i) => [i * 1e-3, 0, 0]);
    const msg = parseServerMessage(JSON.stringify({ ...FRAME, nodes }));
    expect(msg?.type).toBe("frame");
    if (msg?.type === "frame") expect(msg.nodes.length).toBe(41);
  });

  it("skips malformed frames without throwing", () => {
    expect(parseServerMessage("{not json")).toBeNull();
    expect(parseServerMessage(JSON.stringify({ type: "frame", nodes: "x" }))).toBeNull();
    expect(
      parseServerMessage(JSON.stringify({ ...FRAME, magnet: { pos: [0, 0] } })),
    ).toBeNull();
    expect(parseServerMessage(JSON.stringify({ type: "wat" }))).toBeNull();
    expect(parseServerMessage("null")).toBeNull();
  });

  it("parses scene / role / ack / err / fatal", () => {
    expect(
      parseServerMessage(
        JSON.stringify({ type: "scene", id: "tank", sdf_mesh: [], body_radius: [] }),
      )?.type,
    ).toBe("scene");
    expect(parseServerMessage(JSON.stringify({ type: "role", controlling: true }))?.type).toBe(
      "role",
    );
    expect(parseServerMessage(JSON.stringify({ type: "ack", seq: 3 }))?.type).toBe("ack");
    const err = parseServerMessage(JSON.stringify({ type: "err", seq: 4, msg: "bad" }));
    expect(err?.type).toBe("err");
    expect(parseServerMessage(JSON.stringify({ type: "fatal", msg: "x" }))?.type).toBe("fatal");
  });
});

describe("encodeCommand", () => {
  it("round-trips a set_magnet command", () => {
    const raw = encodeCommand({
      type: "set_magnet",
      seq: 7,
      pos: [0.01, 0, -0.017],
      axis: [0, 1, 0],
    });
    const parsed = JSON.parse(raw);
    expect(parsed.type).toBe("set_magnet");
    expect(parsed.seq).toBe(7);
    expect(parsed.pos[0]).toBeCloseTo(0.01);
  });
});
