import { describe, expect, it } from "vitest";
import { replayThroughServer, validateCommandLog, type CommandLog } from "../src/recorder.js";

const GOOD: CommandLog = {
  scenario: "tank-teleop",
  record_stride: 1000,
  dt: 1.2e-6,
  final_step: 5000,
  commands: [
    { step: 100, position: [0.01, 0, -0.017], axis: [-1, 0, 0] },
    { step: 2000, position: [0.02, 0, -0.017], axis: [0, -1, 0] },
  ],
  hash: "ab".repeat(32),
};

describe("validateCommandLog", () => {
  it("accepts a well-formed log", () => {
    expect(validateCommandLog(GOOD)).toEqual([]);
  });

  it("accepts an empty session", () => {
    expect(validateCommandLog({ ...GOOD, commands: [], final_step: 0 })).toEqual([]);
  });

  it("reports per-line issues for malformed commands", () => {
    const bad = {
      ...GOOD,
      commands: [
        { step: 100, position: [0.01, 0, -0.017], axis: [-1, 0, 0] },
        { step: 50, position: [0, 0], axis: [0, -1, 0] },
        { step: -1, position: [0, 0, 0], axis: "x" },
      ],
    };
    const issues = validateCommandLog(bad);
    const lines = issues.map((i) => i.line);
    expect(lines).toContain(1);
    expect(lines).toContain(2);
    expect(issues.some((i) => i.msg.includes("non-decreasing"))).toBe(true);
    expect(issues.some((i) => i.msg.includes("3-number"))).toBe(true);
  });

  it("flags missing document fields", () => {
    const issues = validateCommandLog({ commands: [] });
    expect(issues.some((i) => i.msg.includes("scenario"))).toBe(true);
    expect(validateCommandLog(null)[0].msg).toContain("object");
  });
});

describe("replayThroughServer", () => {
  it("posts the log and returns the hash", async () => {
    let posted: unknown = null;
    const fakeFetch = (async (_url: string, init?: RequestInit) => {
      posted = JSON.parse(String(init?.body));
      return {
        ok: true,
        status: 200,
        json: async () => ({ hash: "deadbeef" }),
      } as Response;
    }) as unknown as typeof fetch;
    const out = await replayThroughServer(GOOD, fakeFetch);
    expect(out.hash).toBe("deadbeef");
    expect((posted as CommandLog).final_step).toBe(5000);
  });

  it("surfaces server-side rejection", async () => {
    const fakeFetch = (async () =>
      ({
        ok: false,
        status: 409,
        json: async () => ({ error: "stop recording before replaying" }),
      }) as Response) as unknown as typeof fetch;
    const out = await replayThroughServer(GOOD, fakeFetch);
    expect(out.error).toContain("recording");
  });
});
