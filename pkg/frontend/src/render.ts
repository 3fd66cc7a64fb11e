// Top-down tray rendering on a 2D canvas. World coordinates are tray-frame
// meters with +y up; the canvas is scaled so the tray fills it with a
// margin, y flipped.

import type { ViewModel } from "./viewmodel.js";

const COLORS = {
  background: "#11161d",
  tray: "#1d2633",
  trayEdge: "#3f5572",
  wall: "#8a93a6",
  goal: "rgba(80, 200, 120, 0.8)",
  goalEdge: "#50c878",
  start: "rgba(120, 160, 255, 0.25)",
  ball: "#f0c040",
  text: "#dde4ee",
  dim: "#8899aa",
  indicator: "#5fb0ff",
  indicatorAgent: "#f08080",
  overlay: "rgba(8, 10, 14, 0.75)",
};

interface Frame {
  scale: number;
  cx: number;
  cy: number;
}

function worldToCanvas(f: Frame, x: number, y: number): [number, number] {
  return [f.cx + x * f.scale, f.cy - y * f.scale];
}

export function render(
  view: ViewModel,
  canvas: HTMLCanvasElement,
  now: number,
  currentTilt: number,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const w = canvas.width;
  const h = canvas.height;
  ctx.fillStyle = COLORS.background;
  ctx.fillRect(0, 0, w, h);

  const layout = view.hello?.layout;
  if (!layout) {
    drawOverlay(ctx, w, h, "connecting to session...");
    return;
  }
  const margin = 50;
  const scale = Math.min(
    (w - 2 * margin) / layout.width,
    (h - 2 * margin) / layout.height,
  );
  const f: Frame = { scale, cx: w / 2, cy: h / 2 };

  // tray surface, tilted shading from the latest tray rotation
  const [tx0, ty0] = worldToCanvas(f, -layout.width / 2, layout.height / 2);
  ctx.fillStyle = COLORS.tray;
  ctx.fillRect(tx0, ty0, layout.width * scale, layout.height * scale);
  ctx.strokeStyle = COLORS.trayEdge;
  ctx.lineWidth = 3;
  ctx.strokeRect(tx0, ty0, layout.width * scale, layout.height * scale);

  // start region
  const [sx, sy] = worldToCanvas(
    f,
    layout.start_region.center[0],
    layout.start_region.center[1],
  );
  ctx.beginPath();
  ctx.setLineDash([6, 4]);
  ctx.strokeStyle = COLORS.dim;
  ctx.lineWidth = 1.5;
  ctx.fillStyle = COLORS.start;
  ctx.arc(sx, sy, layout.start_region.radius * scale, 0, Math.PI * 2);
  ctx.fill();
  ctx.stroke();
  ctx.setLineDash([]);

  // goal disc
  const [gx, gy] = worldToCanvas(f, layout.goal_center[0], layout.goal_center[1]);
  ctx.beginPath();
  ctx.fillStyle = COLORS.goal;
  ctx.arc(gx, gy, layout.goal_radius * scale, 0, Math.PI * 2);
  ctx.fill();
  ctx.strokeStyle = COLORS.goalEdge;
  ctx.stroke();

  // walls
  ctx.fillStyle = COLORS.wall;
  for (const wall of layout.walls) {
    const [wx, wy] = worldToCanvas(f, wall.x_min, wall.y_max);
    ctx.fillRect(
      wx,
      wy,
      (wall.x_max - wall.x_min) * scale,
      (wall.y_max - wall.y_min) * scale,
    );
  }

  // ball (interpolated for display only)
  const ball = view.displayBall(now);
  if (ball) {
    const [bx, by] = worldToCanvas(f, ball[0], ball[1]);
    ctx.beginPath();
    ctx.fillStyle = COLORS.ball;
    ctx.arc(bx, by, Math.max(3, layout.ball_radius * scale), 0, Math.PI * 2);
    ctx.fill();
  }

  drawTiltIndicators(ctx, view, w, h, currentTilt);
  drawHud(ctx, view, w, h);

  if (view.connection !== "open") {
    drawOverlay(ctx, w, h, "connection lost - reconnecting...");
  } else if (view.isStale(now)) {
    drawOverlay(
      ctx,
      w,
      h,
      view.state === null ? "waiting for the session to start..." : "stream stalled...",
    );
  }
}

function drawTiltIndicators(
  ctx: CanvasRenderingContext2D,
  view: ViewModel,
  w: number,
  h: number,
  currentTilt: number,
): void {
  const tray = view.state?.tray ?? [0, 0];
  const theta = view.thetaMax || 0.2;
  // bottom bar: rotation about y (human axis by default), normalized
  drawBar(ctx, w / 2, h - 22, 180, "tray about y", tray[1] / theta,
    COLORS.indicator);
  // left bar: rotation about x (agent axis), drawn vertically
  drawBarVertical(ctx, 24, h / 2, 180, "about x", tray[0] / theta,
    COLORS.indicatorAgent);
  // your commanded tilt, above the bottom bar
  drawBar(ctx, w / 2, h - 44, 180, "your command", currentTilt,
    COLORS.indicator);
}

function drawBar(
  ctx: CanvasRenderingContext2D,
  cx: number,
  cy: number,
  width: number,
  label: string,
  value: number,
  color: string,
): void {
  const v = Math.max(-1, Math.min(1, value));
  ctx.strokeStyle = COLORS.dim;
  ctx.lineWidth = 1;
  ctx.strokeRect(cx - width / 2, cy - 5, width, 10);
  ctx.fillStyle = color;
  ctx.fillRect(cx, cy - 4, (v * width) / 2, 8);
  ctx.beginPath();
  ctx.moveTo(cx, cy - 7);
  ctx.lineTo(cx, cy + 7);
  ctx.stroke();
  ctx.fillStyle = COLORS.dim;
  ctx.font = "10px system-ui, sans-serif";
  ctx.textAlign = "left";
  ctx.fillText(label, cx + width / 2 + 8, cy + 3);
}

function drawBarVertical(
  ctx: CanvasRenderingContext2D,
  cx: number,
  cy: number,
  height: number,
  label: string,
  value: number,
  color: string,
): void {
  const v = Math.max(-1, Math.min(1, value));
  ctx.strokeStyle = COLORS.dim;
  ctx.lineWidth = 1;
  ctx.strokeRect(cx - 5, cy - height / 2, 10, height);
  ctx.fillStyle = color;
  ctx.fillRect(cx - 4, cy, 8, (-v * height) / 2);
  ctx.beginPath();
  ctx.moveTo(cx - 7, cy);
  ctx.lineTo(cx + 7, cy);
  ctx.stroke();
  ctx.fillStyle = COLORS.dim;
  ctx.font = "10px system-ui, sans-serif";
  ctx.textAlign = "center";
  ctx.fillText(label, cx, cy + height / 2 + 14);
}

function drawHud(
  ctx: CanvasRenderingContext2D,
  view: ViewModel,
  w: number,
  _h: number,
): void {
  ctx.fillStyle = COLORS.text;
  ctx.font = "14px system-ui, sans-serif";
  ctx.textAlign = "left";
  const phase = view.state?.phase ?? "waiting";
  const block = view.state?.block ?? 0;
  const step = view.state?.step_index ?? 0;
  ctx.fillText(`phase: ${phase}   block: ${block}   step: ${step}`, 14, 22);

  const role = view.role ? ` [${view.role}]` : "";
  ctx.fillText(`mode: ${view.inputMode}${role}`, 14, 42);

  ctx.textAlign = "right";
  const mean = view.meanScore();
  const results = view.episodeResults;
  const latest = results.length
    ? `last score ${results[results.length - 1].score}`
    : "no trials yet";
  const meanText = mean === null ? "" : `   mean ${mean.toFixed(1)}`;
  ctx.fillText(`${latest}${meanText} (${results.length} trials)`, w - 14, 22);

  if (view.lastError) {
    ctx.fillStyle = "#ff7070";
    ctx.textAlign = "left";
    ctx.fillText(view.lastError, 14, 62);
  }
}

function drawOverlay(
  ctx: CanvasRenderingContext2D,
  w: number,
  h: number,
  text: string,
): void {
  ctx.fillStyle = COLORS.overlay;
  ctx.fillRect(0, 0, w, h);
  ctx.fillStyle = COLORS.text;
  ctx.font = "18px system-ui, sans-serif";
  ctx.textAlign = "center";
  ctx.fillText(text, w / 2, h / 2);
}
