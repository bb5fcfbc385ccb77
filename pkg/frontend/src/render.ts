/**
 * Top-down 2-D canvas rendering. State fidelity over visual fidelity: the
 * scene draws exactly what the frame contains — road lanes, obstacles,
 * the AV, and the platoon followers (projected onto the AV's lane axis).
 */
import { FrameMessage } from "./protocol.js";
import { hudLines } from "./hud.js";
import { SceneModel } from "./store.js";

const LANE_WIDTH = 3.5; // m, matches the scenario default; cosmetic only
const LANE_COUNT = 3;
const AV_LENGTH = 4.0;
const AV_WIDTH = 2.0;

export function worldToScreen(
  scene: SceneModel,
  canvasW: number,
  canvasH: number,
  wx: number,
  wy: number,
): [number, number] {
  const { cx, cy, scale } = scene.camera;
  // Road x runs rightward across the screen, road y (lane offset) upward.
  const sx = canvasW * 0.3 + (wx - cx) * scale;
  const sy = canvasH * 0.5 - (wy - cy) * scale;
  return [sx, sy];
}

export function drawScene(
  ctx: CanvasRenderingContext2D,
  scene: SceneModel,
): void {
  const { width, height } = ctx.canvas;
  ctx.fillStyle = "#1b1f23";
  ctx.fillRect(0, 0, width, height);
  const frame = scene.frame;
  if (!frame) {
    drawBannerText(ctx, "waiting for frames…");
    return;
  }

  drawRoad(ctx, scene, width, height);
  for (const o of frame.obstacles) {
    const [sx, sy] = worldToScreen(scene, width, height, o.x, o.y);
    ctx.fillStyle = "#d9822b";
    ctx.beginPath();
    ctx.arc(sx, sy, o.radius * scene.camera.scale, 0, Math.PI * 2);
    ctx.fill();
  }
  for (const f of frame.followers) {
    drawCar(ctx, scene, f.loc, frame.av.y, 0, "#4c7bd9");
  }
  drawCar(ctx, scene, frame.av.x, frame.av.y, frame.av.heading, "#3fb950");

  drawHud(ctx, frame);
  if (scene.schemaMismatch) {
    drawBanner(ctx, "incompatible frame schema — read-only view");
  } else if (scene.status === "paused") {
    drawBanner(ctx, "PAUSED — link lost");
  } else if (scene.status === "ended") {
    drawBanner(ctx, "end of stream");
  }
}

function drawRoad(
  ctx: CanvasRenderingContext2D,
  scene: SceneModel,
  width: number,
  height: number,
): void {
  const [, topY] = worldToScreen(scene, width, height, 0, LANE_COUNT * LANE_WIDTH);
  const [, botY] = worldToScreen(scene, width, height, 0, 0);
  ctx.fillStyle = "#2d333b";
  ctx.fillRect(0, topY, width, botY - topY);
  ctx.strokeStyle = "#768390";
  ctx.setLineDash([12, 10]);
  for (let lane = 1; lane < LANE_COUNT; lane += 1) {
    const [, y] = worldToScreen(scene, width, height, 0, lane * LANE_WIDTH);
    ctx.beginPath();
    ctx.moveTo(0, y);
    ctx.lineTo(width, y);
    ctx.stroke();
  }
  ctx.setLineDash([]);
}

function drawCar(
  ctx: CanvasRenderingContext2D,
  scene: SceneModel,
  wx: number,
  wy: number,
  heading: number,
  color: string,
): void {
  const { width, height } = ctx.canvas;
  const [sx, sy] = worldToScreen(scene, width, height, wx, wy);
  const s = scene.camera.scale;
  ctx.save();
  ctx.translate(sx, sy);
  ctx.rotate(-heading);
  ctx.fillStyle = color;
  ctx.fillRect((-AV_LENGTH / 2) * s, (-AV_WIDTH / 2) * s, AV_LENGTH * s, AV_WIDTH * s);
  ctx.restore();
}

function drawHud(ctx: CanvasRenderingContext2D, frame: FrameMessage): void {
  ctx.font = "14px monospace";
  let y = 22;
  for (const line of hudLines(frame.hud, frame.flags)) {
    ctx.fillStyle = line.highlight ? "#f85149" : "#adbac7";
    ctx.fillText(`${line.label}: ${line.value}`, 12, y);
    y += 18;
  }
}

function drawBanner(ctx: CanvasRenderingContext2D, text: string): void {
  const { width } = ctx.canvas;
  ctx.fillStyle = "rgba(248, 81, 73, 0.85)";
  ctx.fillRect(0, 0, width, 36);
  ctx.fillStyle = "#ffffff";
  ctx.font = "16px sans-serif";
  ctx.fillText(text, 12, 24);
}

function drawBannerText(ctx: CanvasRenderingContext2D, text: string): void {
  ctx.fillStyle = "#768390";
  ctx.font = "16px sans-serif";
  ctx.fillText(text, 12, 24);
}
