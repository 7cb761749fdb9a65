// Pure layout math for the HUD panels; kept free of DOM so it unit-tests
// without a browser.

import { Primitive, VaneArrow } from "./protocol";

export interface ArrowPlacement {
  id: string;
  x: number; // arrow pivot on the pole
  y: number;
  angle: number; // screen rotation in rad; 0 points up-road, + swings left
  length: number;
  color: string;
  symbol: string;
  glyph: { x: number; y: number; size: number }; // sign badge box (centered)
}

export interface PoleGeometry {
  x: number;
  topY: number;
  bottomY: number;
}

export function cssColor(rgb: number[]): string {
  const [r, g, b] = rgb;
  return `rgb(${Math.round(r)}, ${Math.round(g)}, ${Math.round(b)})`;
}

/**
 * Place arrows on the pole by their server-given heights. Height 1 is the
 * pole top; glyph badges sit just beside the pivot, sized under the rank
 * step so stacked arrows cannot overlap.
 */
export function layoutArrows(arrows: VaneArrow[], pole: PoleGeometry): ArrowPlacement[] {
  const span = pole.bottomY - pole.topY;
  const glyphSize = Math.min(0.18 * span, 42);
  const length = 0.42 * span;
  return arrows.map((a) => {
    const y = pole.bottomY - a.height * span;
    return {
      id: a.id,
      x: pole.x,
      y,
      angle: a.bearing,
      length,
      color: cssColor(a.color),
      symbol: a.symbol,
      glyph: { x: pole.x + glyphSize * 0.9, y: y - glyphSize * 0.7, size: glyphSize },
    };
  });
}

export function glyphBoxesOverlap(a: ArrowPlacement, b: ArrowPlacement): boolean {
  const half = (a.glyph.size + b.glyph.size) / 2;
  return Math.abs(a.glyph.x - b.glyph.x) < half && Math.abs(a.glyph.y - b.glyph.y) < half;
}

/** Bird view: meters (x forward, y left) to canvas px, ego bottom-center. */
export function birdToCanvas(
  xM: number,
  yM: number,
  extentM: number,
  size: number,
): [number, number] {
  const scale = size / extentM;
  return [size / 2 - yM * scale, size - 1 - xM * scale];
}

/** Scene primitives arrive in camera pixels; the panel scales them. */
export function sceneScale(camWidth: number, camHeight: number, panelWidth: number): number {
  void camHeight;
  return panelWidth / camWidth;
}

/** Panel pixel back to camera pixel (for the gaze cursor). */
export function panelToCameraPx(
  panelX: number,
  panelY: number,
  scale: number,
): [number, number] {
  return [panelX / scale, panelY / scale];
}

export function primitiveBounds(p: Primitive): { cx: number; cy: number } {
  if (p.kind === "box2d") {
    return { cx: (p.min[0] + p.max[0]) / 2, cy: (p.min[1] + p.max[1]) / 2 };
  }
  if (p.kind === "circle2d") {
    return { cx: p.center[0], cy: p.center[1] };
  }
  return { cx: (p.a[0] + p.b[0]) / 2, cy: (p.a[1] + p.b[1]) / 2 };
}
