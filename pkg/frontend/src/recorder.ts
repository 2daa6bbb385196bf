// Command-log download/upload helpers. The server owns the canonical log; the
// client fetches it after stopping a recording and can replay it through the
// server's /replay endpoint, which reruns the session headlessly and returns
// the trajectory hash for comparison.

export interface CommandLog {
  scenario: string;
  record_stride: number;
  dt: number;
  final_step: number;
  commands: { step: number; position: number[]; axis: number[] }[];
  hash: string;
}

export interface LogIssue {
  line: number; // command index, -1 for document-level problems
  msg: string;
}

export function validateCommandLog(doc: unknown): LogIssue[] {
  const issues: LogIssue[] = [];
  if (typeof doc !== "object" || doc === null) {
    return [{ line: -1, msg: "log must be a JSON object" }];
  }
  const log = doc as Record<string, unknown>;
  for (const key of ["scenario", "final_step", "commands", "hash"]) {
    if (!(key in log)) issues.push({ line: -1, msg: `missing field '${key}'` });
  }
  if (!Array.isArray(log.commands)) {
    issues.push({ line: -1, msg: "'commands' must be an array" });
    return issues;
  }
  let lastStep = -1;
  log.commands.forEach((cmd, i) => {
    if (typeof cmd !== "object" || cmd === null) {
      issues.push({ line: i, msg: "command must be an object" });
      return;
    }
    const c = cmd as Record<string, unknown>;
    if (typeof c.step !== "number" || c.step < 0 || !Number.isInteger(c.step)) {
      issues.push({ line: i, msg: "'step' must be a non-negative integer" });
    } else {
      if (c.step < lastStep) issues.push({ line: i, msg: "steps must be non-decreasing" });
      lastStep = c.step;
    }
    for (const key of ["position", "axis"]) {
      const v = c[key];
      if (!Array.isArray(v) || v.length !== 3 || !v.every((x) => typeof x === "number")) {
        issues.push({ line: i, msg: `'${key}' must be a 3-number array` });
      }
    }
  });
  if (typeof log.final_step === "number" && lastStep > (log.final_step as number)) {
    issues.push({ line: -1, msg: "command step beyond final_step" });
  }
  return issues;
}

export function logToBlobUrl(log: CommandLog): string {
  const blob = new Blob([JSON.stringify(log, null, 1)], { type: "application/json" });
  return URL.createObjectURL(blob);
}

export async function replayThroughServer(
  log: CommandLog,
  fetchFn: typeof fetch = fetch,
): Promise<{ hash?: string; error?: string }> {
  const resp = await fetchFn("/replay", {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(log),
  });
  const body = (await resp.json()) as { hash?: string; error?: string };
  if (!resp.ok) return { error: body.error ?? `replay failed (${resp.status})` };
  return body;
}
