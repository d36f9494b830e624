"""Minimal deterministic PNG rasterizer for line plots (no timestamps, no metadata)."""
from __future__ import annotations

import math
import struct
import zlib

import numpy as np


class Canvas:
    def __init__(self, width: int = 800, height: int = 800, margin: int = 50):
        self.w, self.h, self.m = width, height, margin
        self.px = np.full((height, width, 3), 255, np.uint8)

    def set_view(self, xmin, xmax, ymin, ymax):
        if xmax <= xmin:
            xmax = xmin + 1.0
        if ymax <= ymin:
            ymax = ymin + 1.0
        self.view = (xmin, xmax, ymin, ymax)

    def to_px(self, x, y):
        xmin, xmax, ymin, ymax = self.view
        u = self.m + (x - xmin) / (xmax - xmin) * (self.w - 2 * self.m)
        v = self.h - self.m - (y - ymin) / (ymax - ymin) * (self.h - 2 * self.m)
        return u, v

    def line_px(self, x0, y0, x1, y1, color=(0, 0, 0)):
        x0, y0, x1, y1 = (int(round(t)) for t in (x0, y0, x1, y1))
        n = max(abs(x1 - x0), abs(y1 - y0), 1)
        if n > 4 * (self.w + self.h):
            return
        xs = np.linspace(x0, x1, n + 1).round().astype(int)
        ys = np.linspace(y0, y1, n + 1).round().astype(int)
        ok = (xs >= 0) & (xs < self.w) & (ys >= 0) & (ys < self.h)
        self.px[ys[ok], xs[ok]] = color

    def polyline(self, xs, ys, color=(0, 0, 160), breaks=None):
        """Draw segments between consecutive finite samples; ``breaks[i]`` cuts segment i -> i+1."""
        for i in range(len(xs) - 1):
            if breaks is not None and breaks[i]:
                continue
            if not all(map(math.isfinite, (xs[i], ys[i], xs[i + 1], ys[i + 1]))):
                continue
            self.line_px(*self.to_px(xs[i], ys[i]), *self.to_px(xs[i + 1], ys[i + 1]), color)

    def axes(self, ticks: int = 5):
        xmin, xmax, ymin, ymax = self.view
        grey = (120, 120, 120)
        m, w, h = self.m, self.w, self.h
        self.line_px(m, h - m, w - m, h - m, grey)
        self.line_px(m, m, m, h - m, grey)
        for i in range(ticks + 1):
            u = m + i * (w - 2 * m) / ticks
            v = h - m - i * (h - 2 * m) / ticks
            self.line_px(u, h - m, u, h - m + 6, grey)
            self.line_px(m - 6, v, m, v, grey)
        if xmin < 0 < xmax:
            u, _ = self.to_px(0, 0)
            self.line_px(u, m, u, h - m, (200, 200, 200))
        if ymin < 0 < ymax:
            _, v = self.to_px(0, 0)
            self.line_px(m, v, w - m, v, (200, 200, 200))

    def png_bytes(self) -> bytes:
        raw = b"".join(b"\x00" + row.tobytes() for row in self.px)

        def chunk(tag, data):
            return (struct.pack(">I", len(data)) + tag + data
                    + struct.pack(">I", zlib.crc32(tag + data) & 0xFFFFFFFF))

        ihdr = struct.pack(">IIBBBBB", self.w, self.h, 8, 2, 0, 0, 0)
        return (b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", ihdr)
                + chunk(b"IDAT", zlib.compress(raw, 9)) + chunk(b"IEND", b""))

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.png_bytes())


def auto_view(xs, ys, pad: float = 0.05, square: bool = False):
    xs = np.asarray(xs, float)
    ys = np.asarray(ys, float)
    ok = np.isfinite(xs) & np.isfinite(ys)
    x0, x1 = float(xs[ok].min()), float(xs[ok].max())
    y0, y1 = float(ys[ok].min()), float(ys[ok].max())
    if square:
        cx, cy, r = (x0 + x1) / 2, (y0 + y1) / 2, max(x1 - x0, y1 - y0) / 2 or 1.0
        x0, x1, y0, y1 = cx - r, cx + r, cy - r, cy + r
    dx, dy = (x1 - x0) * pad or 1.0, (y1 - y0) * pad or 1.0
    return x0 - dx, x1 + dx, y0 - dy, y1 + dy
