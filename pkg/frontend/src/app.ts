// Steering client: connects to /ws, renders the stream, and turns pointer
// gestures into rate-limited set_magnet commands with optimistic rendering.
//   drag          move magnet in the view plane
//   wheel         out-of-plane (z) offset
//   shift+drag    rotate the moment axis in-plane
//   R             toggle recording, P pause/resume, 0 reset, O orbit view

import type { FrameMessage, SceneMessage, Vec3 } from "./protocol.js";
import { encodeCommand, parseServerMessage } from "./protocol.js";
import { RateLimiter } from "./rateLimiter.js";
import { dragToWorldDelta, fitView, type Orbit } from "./transform.js";
import { metricsText, renderFrame, type ViewState } from "./renderer.js";
import { replayThroughServer, validateCommandLog, type CommandLog } from "./recorder.js";

const canvas = document.getElementById("view") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const panel = document.getElementById("metrics")!;
const log = document.getElementById("log")!;
const recordBtn = document.getElementById("record") as HTMLButtonElement;
const downloadBtn = document.getElementById("download") as HTMLButtonElement;
const replayInput = document.getElementById("replay") as HTMLInputElement;

let scene: SceneMessage | null = null;
let frame: FrameMessage | null = null;
let lastFrameTimes: number[] = [];

const vs: ViewState = {
  view: fitView(canvas.width, canvas.height, []),
  orbit: null,
  pending: null,
  connected: false,
  controlling: false,
};

function say(msg: string): void {
  const line = document.createElement("div");
  line.textContent = msg;
  log.prepend(line);
  while (log.childElementCount > 8) log.lastElementChild?.remove();
}

const ws = new WebSocket(`ws://${location.host}/ws`);

const limiter = new RateLimiter<{ pos: Vec3; axis: Vec3 }>((payload, seq) => {
  if (ws.readyState === WebSocket.OPEN) {
    ws.send(encodeCommand({ type: "set_magnet", seq, pos: payload.pos, axis: payload.axis }));
  }
}, 60);

// commands buffered while disconnected are dropped after 1 s with a banner
let bufferedWhileDown: { payload: { pos: Vec3; axis: Vec3 }; at: number } | null = null;
setInterval(() => {
  if (bufferedWhileDown && performance.now() - bufferedWhileDown.at > 1000) {
    bufferedWhileDown = null;
    say("offline: dropped buffered magnet command");
  }
}, 250);

function sendPose(pos: Vec3, axis: Vec3): void {
  vs.pending = { pos, axis };
  if (!vs.connected) {
    bufferedWhileDown = { payload: { pos, axis }, at: performance.now() };
    return;
  }
  limiter.push({ pos, axis });
}

ws.onopen = () => {
  vs.connected = true;
  say("connected");
  if (bufferedWhileDown) {
    limiter.push(bufferedWhileDown.payload);
    bufferedWhileDown = null;
  }
};
ws.onclose = () => {
  vs.connected = false;
  say("disconnected");
};
ws.onmessage = (ev) => {
  const msg = parseServerMessage(String(ev.data));
  if (msg === null) {
    say("malformed message skipped");
    return;
  }
  switch (msg.type) {
    case "scene": {
      scene = msg;
      const pts = msg.sdf_mesh.flat() as [number, number][];
      vs.view = fitView(canvas.width, canvas.height, pts);
      say(`scene: ${msg.id}`);
      if (msg.id === "three-holes") say("press O for the 3D orbit view");
      break;
    }
    case "role":
      vs.controlling = msg.controlling;
      say(msg.controlling ? "controlling" : "read-only (another operator is connected)");
      break;
    case "frame": {
      frame = msg;
      lastFrameTimes.push(performance.now());
      if (lastFrameTimes.length > 90) lastFrameTimes = lastFrameTimes.slice(-60);
      // reconcile the optimistic pose once the server echoes it
      if (vs.pending) {
        const dp = Math.hypot(
          msg.magnet.pos[0] - vs.pending.pos[0],
          msg.magnet.pos[1] - vs.pending.pos[1],
          msg.magnet.pos[2] - vs.pending.pos[2],
        );
        if (dp < 1e-9) vs.pending = null;
      }
      recordBtn.textContent = msg.recording ? "stop recording" : "record";
      break;
    }
    case "ack":
      break;
    case "err":
      say(`server rejected #${msg.seq}: ${msg.msg}`);
      break;
    case "fatal":
      say(`engine fault: ${msg.msg}`);
      vs.connected = false;
      break;
  }
};

// --- pointer handling --------------------------------------------------------

let dragging = false;
let rotating = false;
let lastPx = 0;
let lastPy = 0;

function currentPose(): { pos: Vec3; axis: Vec3 } {
  if (vs.pending) return { pos: [...vs.pending.pos], axis: [...vs.pending.axis] };
  if (frame) return { pos: [...frame.magnet.pos], axis: [...frame.magnet.axis] };
  return { pos: [0, 0, -0.017], axis: [-1, 0, 0] };
}

canvas.addEventListener("pointerdown", (e) => {
  dragging = true;
  rotating = e.shiftKey;
  lastPx = e.offsetX;
  lastPy = e.offsetY;
  canvas.setPointerCapture(e.pointerId);
});
canvas.addEventListener("pointerup", () => {
  dragging = false;
  limiter.flush();
});
canvas.addEventListener("pointermove", (e) => {
  if (!dragging) return;
  const dx = e.offsetX - lastPx;
  const dy = e.offsetY - lastPy;
  lastPx = e.offsetX;
  lastPy = e.offsetY;
  const pose = currentPose();
  if (rotating) {
    const ang = Math.atan2(pose.axis[1], pose.axis[0]) + dx * 0.01;
    const z = pose.axis[2];
    const planar = Math.sqrt(Math.max(1 - z * z, 0));
    pose.axis = [planar * Math.cos(ang), planar * Math.sin(ang), z];
  } else {
    const [wx, wy] = dragToWorldDelta(vs.view, dx, dy);
    pose.pos = [pose.pos[0] + wx, pose.pos[1] + wy, pose.pos[2]];
  }
  sendPose(pose.pos, pose.axis);
});
canvas.addEventListener("wheel", (e) => {
  e.preventDefault();
  const pose = currentPose();
  pose.pos = [pose.pos[0], pose.pos[1], pose.pos[2] - e.deltaY * 1e-5];
  sendPose(pose.pos, pose.axis);
});

let cmdSeq = 1000000; // control commands use a separate seq range from poses
function sendSimple(type: "pause" | "resume" | "reset"): void {
  if (ws.readyState === WebSocket.OPEN) {
    ws.send(encodeCommand({ type, seq: ++cmdSeq }));
  }
}

window.addEventListener("keydown", (e) => {
  if (e.key === "p") sendSimple(frame?.paused ? "resume" : "pause");
  if (e.key === "0") sendSimple("reset");
  if (e.key === "r") toggleRecording();
  if (e.key === "o") toggleOrbit();
});

document.getElementById("pause")!.addEventListener("click", () => sendSimple("pause"));
document.getElementById("resume")!.addEventListener("click", () => sendSimple("resume"));
document.getElementById("reset")!.addEventListener("click", () => sendSimple("reset"));

function toggleOrbit(): void {
  if (vs.orbit) {
    vs.orbit = null;
    return;
  }
  const o: Orbit = {
    yaw: 0.6,
    pitch: 0.5,
    scale: vs.view.scale,
    width: canvas.width,
    height: canvas.height,
    centerZ: 0.01,
  };
  vs.orbit = o;
}

function toggleRecording(): void {
  if (ws.readyState !== WebSocket.OPEN) return;
  const on = !(frame?.recording ?? false);
  ws.send(encodeCommand({ type: "record", seq: ++cmdSeq, on }));
}

recordBtn.addEventListener("click", toggleRecording);

downloadBtn.addEventListener("click", async () => {
  const resp = await fetch("/command-log");
  if (!resp.ok) {
    say("no finished recording on the server yet");
    return;
  }
  const logDoc = (await resp.json()) as CommandLog;
  const a = document.createElement("a");
  const blob = new Blob([JSON.stringify(logDoc, null, 1)], { type: "application/json" });
  a.href = URL.createObjectURL(blob);
  a.download = `command-log-${logDoc.scenario}.json`;
  a.click();
  say(`downloaded log (${logDoc.commands.length} commands, hash ${logDoc.hash.slice(0, 12)}...)`);
});

replayInput.addEventListener("change", async () => {
  const file = replayInput.files?.[0];
  if (!file) return;
  if (frame?.recording) {
    say("replay rejected: stop recording first");
    return;
  }
  let doc: unknown;
  try {
    doc = JSON.parse(await file.text());
  } catch {
    say("replay upload: not valid JSON");
    return;
  }
  const issues = validateCommandLog(doc);
  if (issues.length) {
    for (const issue of issues.slice(0, 5)) {
      say(`log line ${issue.line}: ${issue.msg}`);
    }
    return;
  }
  const logDoc = doc as CommandLog;
  say("replaying headlessly on the server...");
  const result = await replayThroughServer(logDoc);
  if (result.error) say(`replay error: ${result.error}`);
  else {
    const match = result.hash === logDoc.hash ? "MATCHES" : "DIFFERS from";
    say(`replay hash ${result.hash?.slice(0, 12)}... ${match} the recorded hash`);
  }
});

// --- render loop ---------------------------------------------------------------

function draw(): void {
  renderFrame(ctx, scene, frame, vs);
  if (frame) {
    panel.textContent = metricsText(frame).join("\n");
  }
  requestAnimationFrame(draw);
}
requestAnimationFrame(draw);
