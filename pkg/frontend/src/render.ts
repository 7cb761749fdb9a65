// Canvas renderers: stylized 2D vane (pole + arrows + sign badges), bird
// panel, and the scene panel drawn from server primitives on a schematic
// road background.

import { cssColor, layoutArrows, birdToCanvas, PoleGeometry } from "./layout";
import { Primitive, StateMessage } from "./protocol";

const POLE_COLOR = "#8d97a5";
const BACKDROP = "#10151c";
const GRID = "#202835";

export function renderHud(ctx: CanvasRenderingContext2D, state: StateMessage | null): void {
  const { width, height } = ctx.canvas;
  ctx.fillStyle = BACKDROP;
  ctx.fillRect(0, 0, width, height);

  const pole: PoleGeometry = {
    x: width / 2,
    topY: 0.12 * height,
    bottomY: 0.88 * height,
  };

  // Ground shadow + pole.
  ctx.strokeStyle = GRID;
  ctx.beginPath();
  ctx.moveTo(0.1 * width, pole.bottomY);
  ctx.lineTo(0.9 * width, pole.bottomY);
  ctx.stroke();
  ctx.strokeStyle = POLE_COLOR;
  ctx.lineWidth = 4;
  ctx.beginPath();
  ctx.moveTo(pole.x, pole.bottomY);
  ctx.lineTo(pole.x, pole.topY);
  ctx.stroke();
  ctx.lineWidth = 1;

  if (!state) return;
  for (const placement of layoutArrows(state.vane, pole).reverse()) {
    drawArrow(ctx, placement.x, placement.y, placement.angle, placement.length, placement.color);
    drawSignBadge(ctx, placement.glyph.x, placement.glyph.y, placement.glyph.size, placement.symbol);
  }
}

function drawArrow(
  ctx: CanvasRenderingContext2D,
  x: number,
  y: number,
  bearing: number,
  length: number,
  color: string,
): void {
  // Up-screen is "ahead"; positive bearing swings the arrow counter-clockwise
  // (to the left), with canvas y pointing down.
  ctx.save();
  ctx.translate(x, y);
  ctx.rotate(-bearing);
  ctx.fillStyle = color;
  ctx.strokeStyle = color;
  ctx.lineWidth = 5;
  ctx.beginPath();
  ctx.moveTo(0, 0.35 * length);
  ctx.lineTo(0, -0.55 * length);
  ctx.stroke();
  ctx.beginPath();
  ctx.moveTo(0, -length);
  ctx.lineTo(-0.28 * length, -0.5 * length);
  ctx.lineTo(0.28 * length, -0.5 * length);
  ctx.closePath();
  ctx.fill();
  ctx.restore();
}

function drawSignBadge(
  ctx: CanvasRenderingContext2D,
  cx: number,
  cy: number,
  size: number,
  symbol: string,
): void {
  const h = size / 2;
  ctx.save();
  ctx.beginPath();
  ctx.moveTo(cx, cy - h);
  ctx.lineTo(cx - h, cy + h);
  ctx.lineTo(cx + h, cy + h);
  ctx.closePath();
  ctx.fillStyle = "#f5f2ea";
  ctx.fill();
  ctx.strokeStyle = "#c81e1e";
  ctx.lineWidth = Math.max(2, size / 9);
  ctx.stroke();
  ctx.fillStyle = "#222";
  ctx.font = `${Math.round(size / 3)}px sans-serif`;
  ctx.textAlign = "center";
  ctx.textBaseline = "middle";
  ctx.fillText(symbol, cx, cy + h / 2.5);
  ctx.restore();
}

export function renderBird(
  ctx: CanvasRenderingContext2D,
  prims: Primitive[],
  extentM: number,
): void {
  const size = ctx.canvas.width;
  ctx.fillStyle = BACKDROP;
  ctx.fillRect(0, 0, size, ctx.canvas.height);
  ctx.strokeStyle = GRID;
  for (let d = 10; d < extentM; d += 10) {
    const [, y] = birdToCanvas(d, 0, extentM, size);
    ctx.beginPath();
    ctx.moveTo(0, y);
    ctx.lineTo(size, y);
    ctx.stroke();
  }
  // Ego marker.
  ctx.fillStyle = "#e8e8e8";
  const [ex, ey] = birdToCanvas(0, 0, extentM, size);
  ctx.fillRect(ex - 4, ey - 7, 8, 7);

  for (const p of prims) {
    ctx.strokeStyle = cssColor(p.color);
    if (p.kind === "box2d") {
      const [x0, y0] = birdToCanvas(p.min[0], p.min[1], extentM, size);
      const [x1, y1] = birdToCanvas(p.max[0], p.max[1], extentM, size);
      ctx.strokeRect(Math.min(x0, x1), Math.min(y0, y1), Math.abs(x1 - x0), Math.abs(y1 - y0));
    } else if (p.kind === "line2d") {
      const [x0, y0] = birdToCanvas(p.a[0], p.a[1], extentM, size);
      const [x1, y1] = birdToCanvas(p.b[0], p.b[1], extentM, size);
      ctx.beginPath();
      ctx.moveTo(x0, y0);
      ctx.lineTo(x1, y1);
      ctx.stroke();
    } else {
      const [x, y] = birdToCanvas(p.center[0], p.center[1], extentM, size);
      ctx.beginPath();
      ctx.arc(x, y, 4, 0, 2 * Math.PI);
      ctx.stroke();
    }
  }
}

export function renderScene(
  ctx: CanvasRenderingContext2D,
  prims: Primitive[],
  scale: number,
): void {
  const { width, height } = ctx.canvas;
  // Schematic background: sky, ground, lane edges toward the horizon.
  const horizon = height / 2;
  ctx.fillStyle = "#17202c";
  ctx.fillRect(0, 0, width, horizon);
  ctx.fillStyle = "#232a23";
  ctx.fillRect(0, horizon, width, height - horizon);
  ctx.strokeStyle = GRID;
  ctx.beginPath();
  ctx.moveTo(0, horizon);
  ctx.lineTo(width, horizon);
  ctx.stroke();
  for (const dx of [-0.35, 0.35]) {
    ctx.beginPath();
    ctx.moveTo(width * (0.5 + dx), height);
    ctx.lineTo(width * 0.5, horizon);
    ctx.stroke();
  }

  for (const p of prims) {
    ctx.strokeStyle = cssColor(p.color);
    ctx.lineWidth = 2;
    if (p.kind === "box2d") {
      ctx.strokeRect(
        p.min[0] * scale,
        p.min[1] * scale,
        (p.max[0] - p.min[0]) * scale,
        (p.max[1] - p.min[1]) * scale,
      );
    } else if (p.kind === "line2d") {
      ctx.beginPath();
      ctx.moveTo(p.a[0] * scale, p.a[1] * scale);
      ctx.lineTo(p.b[0] * scale, p.b[1] * scale);
      ctx.stroke();
    } else {
      ctx.beginPath();
      ctx.arc(p.center[0] * scale, p.center[1] * scale, p.radius * scale, 0, 2 * Math.PI);
      ctx.stroke();
    }
    ctx.lineWidth = 1;
  }
}
