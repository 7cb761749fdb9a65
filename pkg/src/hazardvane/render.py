"""Headless rasterizer writing binary PPM (P6) frames for golden-file tests."""

from __future__ import annotations

import math

import numpy as np

from .overlay import OverlayPrimitive

BACKGROUND = (0, 0, 0)


def _clip_px(x: float, lo: int, hi: int) -> int:
    return min(hi, max(lo, int(round(x))))


def _draw_hline(img: np.ndarray, y: int, x0: int, x1: int, color) -> None:
    h, w, _ = img.shape
    if 0 <= y < h:
        img[y, max(0, min(x0, x1)) : min(w, max(x0, x1) + 1)] = color


def _draw_vline(img: np.ndarray, x: int, y0: int, y1: int, color) -> None:
    h, w, _ = img.shape
    if 0 <= x < w:
        img[max(0, min(y0, y1)) : min(h, max(y0, y1) + 1), x] = color


def draw_box(img: np.ndarray, x0: float, y0: float, x1: float, y1: float, color) -> None:
    xi0, yi0, xi1, yi1 = (int(round(v)) for v in (x0, y0, x1, y1))
    _draw_hline(img, yi0, xi0, xi1, color)
    _draw_hline(img, yi1, xi0, xi1, color)
    _draw_vline(img, xi0, yi0, yi1, color)
    _draw_vline(img, xi1, yi0, yi1, color)


def draw_line(img: np.ndarray, x0: float, y0: float, x1: float, y1: float, color) -> None:
    h, w, _ = img.shape
    n = int(max(abs(x1 - x0), abs(y1 - y0))) + 1
    for i in range(n + 1):
        s = i / n
        x = int(round(x0 + s * (x1 - x0)))
        y = int(round(y0 + s * (y1 - y0)))
        if 0 <= x < w and 0 <= y < h:
            img[y, x] = color


def draw_circle(img: np.ndarray, cx: float, cy: float, r: float, color) -> None:
    h, w, _ = img.shape
    n = max(16, int(2 * math.pi * max(r, 1.0)))
    for i in range(n):
        a = 2 * math.pi * i / n
        x = int(round(cx + r * math.cos(a)))
        y = int(round(cy + r * math.sin(a)))
        if 0 <= x < w and 0 <= y < h:
            img[y, x] = color


def render_primitives_px(
    prims: list[OverlayPrimitive], width: int, height: int, scale: float = 1.0
) -> np.ndarray:
    """Rasterize pixel-space primitives (scene overlay) into an RGB image."""
    img = np.zeros((height, width, 3), dtype=np.uint8)
    img[:] = BACKGROUND
    for p in prims:
        c = p.coords
        if p.kind == "box2d":
            draw_box(img, c[0] * scale, c[1] * scale, c[2] * scale, c[3] * scale, p.color)
        elif p.kind == "line2d":
            draw_line(img, c[0] * scale, c[1] * scale, c[2] * scale, c[3] * scale, p.color)
        elif p.kind == "circle2d":
            draw_circle(img, c[0] * scale, c[1] * scale, c[2] * scale, p.color)
    return img


def render_bird_px(
    prims: list[OverlayPrimitive], extent_m: float, size_px: int
) -> np.ndarray:
    """Rasterize bird-view primitives (M-frame meters) top-down.

    Ego sits at the bottom center; forward (+x) is up, left (+y) is left.
    """
    img = np.zeros((size_px, size_px, 3), dtype=np.uint8)
    img[:] = BACKGROUND
    scale = size_px / extent_m

    def to_px(x_m: float, y_m: float) -> tuple[float, float]:
        return (size_px / 2.0 - y_m * scale, size_px - 1 - x_m * scale)

    for p in prims:
        c = p.coords
        if p.kind == "box2d":
            (u0, v0) = to_px(c[0], c[1])
            (u1, v1) = to_px(c[2], c[3])
            draw_box(img, min(u0, u1), min(v0, v1), max(u0, u1), max(v0, v1), p.color)
        elif p.kind == "line2d":
            (u0, v0) = to_px(c[0], c[1])
            (u1, v1) = to_px(c[2], c[3])
            draw_line(img, u0, v0, u1, v1, p.color)
        elif p.kind == "circle2d":
            (u, v) = to_px(c[0], c[1])
            draw_circle(img, u, v, c[2] * scale, p.color)
    return img


def write_ppm(path, img: np.ndarray) -> None:
    h, w, _ = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.astype(np.uint8).tobytes())


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"P6":
            raise ValueError(f"not a binary PPM: {magic!r}")
        dims = fh.readline().split()
        w, h = int(dims[0]), int(dims[1])
        maxval = int(fh.readline())
        if maxval != 255:
            raise ValueError(f"unsupported maxval {maxval}")
        data = fh.read(w * h * 3)
    return np.frombuffer(data, dtype=np.uint8).reshape(h, w, 3)
