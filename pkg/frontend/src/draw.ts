/**
 * Canvas drawing for the sensor view and the mini map. Consumes only the
 * declarative panel model; all geometry arrives pre-computed.
 */

import { MiniMapMarker, Polygon, SensorPanel } from "./render.js";

function fitTransform(
  ctx: CanvasRenderingContext2D,
  xs: number[],
  ys: number[],
  pad = 20,
): (x: number, y: number) => [number, number] {
  const { width, height } = ctx.canvas;
  const minX = Math.min(...xs, -1);
  const maxX = Math.max(...xs, 1);
  const minY = Math.min(...ys, -1);
  const maxY = Math.max(...ys, 1);
  const scale = Math.min(
    (width - 2 * pad) / Math.max(1e-6, maxX - minX),
    (height - 2 * pad) / Math.max(1e-6, maxY - minY),
  );
  return (x, y) => [
    pad + (x - minX) * scale,
    height - pad - (y - minY) * scale, // y up
  ];
}

function drawPolygon(
  ctx: CanvasRenderingContext2D,
  poly: Polygon,
  tf: (x: number, y: number) => [number, number],
  alpha: number,
): void {
  if (poly.points.length < 3) return;
  ctx.beginPath();
  const [x0, y0] = tf(poly.points[0][0], poly.points[0][1]);
  ctx.moveTo(x0, y0);
  for (const [x, y] of poly.points.slice(1)) {
    const [px, py] = tf(x, y);
    ctx.lineTo(px, py);
  }
  ctx.closePath();
  ctx.globalAlpha = alpha;
  ctx.fillStyle = poly.color;
  ctx.fill();
  ctx.globalAlpha = 1;
  ctx.strokeStyle = poly.color;
  ctx.stroke();
}

export function drawSensorPanel(ctx: CanvasRenderingContext2D, panel: SensorPanel): void {
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  const pts = [...panel.focusZone.points, ...panel.clearZone.points, ...panel.lidarPoints.points];
  const tf = fitTransform(ctx, pts.map((p) => p[0]), pts.map((p) => p[1]));

  drawPolygon(ctx, panel.focusZone, tf, panel.highlight === "focus" ? 0.6 : 0.3);
  drawPolygon(ctx, panel.clearZone, tf, panel.highlight === "clear" ? 0.7 : 0.4);

  // the vehicle itself, axis-aligned in its own frame at the origin
  const hl = panel.vehicle.length_m / 2;
  const hw = panel.vehicle.width_m / 2;
  drawPolygon(
    ctx,
    { points: [[-hl, -hw], [hl, -hw], [hl, hw], [-hl, hw]], color: panel.vehicle.color },
    tf,
    0.9,
  );

  ctx.fillStyle = panel.lidarPoints.color;
  for (const [x, y] of panel.lidarPoints.points) {
    const [px, py] = tf(x, y);
    ctx.fillRect(px - 1.5, py - 1.5, 3, 3);
  }
}

export function drawMiniMap(ctx: CanvasRenderingContext2D, markers: MiniMapMarker[]): void {
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  if (!markers.length) return;
  const tf = fitTransform(ctx, markers.map((m) => m.x), markers.map((m) => m.y));
  for (const m of markers) {
    const [px, py] = tf(m.x, m.y);
    ctx.beginPath();
    ctx.arc(px, py, m.active ? 7 : 5, 0, 2 * Math.PI);
    ctx.fillStyle = m.color;
    ctx.fill();
    ctx.fillStyle = "#333";
    ctx.font = "11px sans-serif";
    ctx.fillText(m.label, px + 9, py + 4);
  }
}

export function drawCameraThumb(
  ctx: CanvasRenderingContext2D,
  thumb: { width: number; height: number; gray8_b64: string },
): void {
  const bytes = Uint8Array.from(atob(thumb.gray8_b64), (c) => c.charCodeAt(0));
  const img = ctx.createImageData(thumb.width, thumb.height);
  for (let i = 0; i < bytes.length; i++) {
    img.data[4 * i] = img.data[4 * i + 1] = img.data[4 * i + 2] = bytes[i];
    img.data[4 * i + 3] = 255;
  }
  ctx.canvas.width = thumb.width;
  ctx.canvas.height = thumb.height;
  ctx.putImageData(img, 0, 0);
}
