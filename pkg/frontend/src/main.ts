/**
 * Page entry point. Query parameters:
 *   ?ws=ws://host:port/drive            live cockpit
 *   ?ws=ws://host:port/replay&mode=replay[&seek=takeover]   replay viewer
 */
import { CockpitClient, webSocketTransport } from "./client.js";
import { drawScene } from "./render.js";
import { parseFrameJson } from "./protocol.js";
import { ReplaySession } from "./replay.js";

function canvasContext(): CanvasRenderingContext2D {
  const canvas = document.getElementById("scene") as HTMLCanvasElement;
  canvas.width = window.innerWidth;
  canvas.height = window.innerHeight;
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("2d canvas unavailable");
  return ctx;
}

function runLive(url: string): void {
  const ctx = canvasContext();
  const client = new CockpitClient(webSocketTransport(url));
  client.start();
  window.addEventListener("keydown", (ev) => {
    client.input.keyDown(ev.key);
    if (ev.key === " ") ev.preventDefault();
  });
  window.addEventListener("keyup", (ev) => client.input.keyUp(ev.key));
  const loop = () => {
    drawScene(ctx, client.store.scene);
    requestAnimationFrame(loop);
  };
  loop();
}

function runReplay(url: string, seekTakeover: boolean): void {
  const ctx = canvasContext();
  const session = new ReplaySession();
  const ws = new WebSocket(url + (seekTakeover ? "?seek=takeover" : ""));
  ws.binaryType = "arraybuffer";
  ws.addEventListener("message", (ev) => {
    if (typeof ev.data === "string") {
      session.end();
      return;
    }
    const bytes = new Uint8Array(ev.data as ArrayBuffer);
    const body = new TextDecoder().decode(bytes.subarray(4));
    session.append(parseFrameJson(body));
  });
  window.addEventListener("keydown", (ev) => {
    if (ev.key === "ArrowRight") session.stepForward();
    if (ev.key === "ArrowLeft") session.stepBack();
    if (ev.key === "t") session.seekToTakeover();
  });
  const loop = () => {
    drawScene(ctx, session.store.scene);
    requestAnimationFrame(loop);
  };
  loop();
}

const params = new URLSearchParams(window.location.search);
const url = params.get("ws") ?? "ws://localhost:8000/drive";
if (params.get("mode") === "replay") {
  runReplay(url, params.get("seek") === "takeover");
} else {
  runLive(url);
}
