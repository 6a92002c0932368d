"""Finite-window lattice fields with CSV and PGM export.

A field stores values on an integer rectangle [x_lo..x_hi] x [y_lo..y_hi];
sites outside the window are implicitly zero.  Real-valued fields hold one
deterministic time slice, integer fields one stochastic slice.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

__all__ = ["Window", "GridField", "real_field", "count_field"]


@dataclass(frozen=True)
class Window:
    x_lo: int
    x_hi: int
    y_lo: int
    y_hi: int

    def __post_init__(self):
        if self.x_hi < self.x_lo or self.y_hi < self.y_lo:
            raise ValueError(f"empty window {self}")

    @property
    def shape(self):
        return (self.x_hi - self.x_lo + 1, self.y_hi - self.y_lo + 1)

    def dilated(self, r: int) -> "Window":
        return Window(self.x_lo - r, self.x_hi + r, self.y_lo - r, self.y_hi + r)

    def contains(self, x: int, y: int) -> bool:
        return self.x_lo <= x <= self.x_hi and self.y_lo <= y <= self.y_hi

    def sites(self):
        for x in range(self.x_lo, self.x_hi + 1):
            for y in range(self.y_lo, self.y_hi + 1):
                yield (x, y)

    @staticmethod
    def square(radius: int, center=(0, 0)) -> "Window":
        cx, cy = center
        return Window(cx - radius, cx + radius, cy - radius, cy + radius)


class GridField:
    """Dense array over a window; data[i, j] is the value at
    (x_lo + i, y_lo + j)."""

    def __init__(self, window: Window, data: np.ndarray | None = None, dtype=np.float64):
        self.window = window
        if data is None:
            self.data = np.zeros(window.shape, dtype=dtype)
        else:
            data = np.asarray(data)
            if data.shape != window.shape:
                raise ValueError(f"data shape {data.shape} does not match window {window.shape}")
            self.data = data

    def copy(self) -> "GridField":
        return GridField(self.window, self.data.copy())

    def get(self, x: int, y: int):
        if not self.window.contains(x, y):
            return self.data.dtype.type(0)
        return self.data[x - self.window.x_lo, y - self.window.y_lo]

    def set(self, x: int, y: int, value) -> None:
        self.data[x - self.window.x_lo, y - self.window.y_lo] = value

    def neighbor_sum(self) -> np.ndarray:
        """Five-point sum: self plus the four l1-neighbors, zero outside."""
        return neighbor_sum(self.data)

    def grown(self, pad: int = 1) -> "GridField":
        out = GridField(self.window.dilated(pad), dtype=self.data.dtype)
        out.data[pad:-pad or None, pad:-pad or None] = self.data
        return out

    def total(self):
        return self.data.sum(dtype=np.float64 if self.data.dtype.kind == "f" else np.int64)

    def antidiagonal(self, n: int, m_lo: int, m_hi: int) -> np.ndarray:
        """Values at sites (m, n - m) for m in [m_lo, m_hi]; zero outside."""
        m = np.arange(m_lo, m_hi + 1)
        xi = m - self.window.x_lo
        yi = (n - m) - self.window.y_lo
        ok = (xi >= 0) & (xi < self.data.shape[0]) & (yi >= 0) & (yi < self.data.shape[1])
        vals = np.zeros(len(m), dtype=self.data.dtype)
        vals[ok] = self.data[xi[ok], yi[ok]]
        return vals

    def to_csv(self, path) -> None:
        """Rows x,y,value sorted by x then y."""
        w = self.window
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "y", "value"])
            for i in range(self.data.shape[0]):
                for j in range(self.data.shape[1]):
                    v = self.data[i, j]
                    writer.writerow(
                        [w.x_lo + i, w.y_lo + j, f"{v:.12g}" if self.data.dtype.kind == "f" else int(v)]
                    )

    def to_pgm(self, path, scale: float = 1.0) -> None:
        """ASCII PGM (P2, maxval 255); gray = round(value * scale * 255).

        Row 0 of the image is the top of the window (largest y).
        """
        gray = np.rint(np.clip(self.data.astype(np.float64) * scale, 0.0, 1.0) * 255.0)
        gray = gray.astype(np.int64).T[::-1, :]  # transpose to (row=y desc, col=x)
        h, w = gray.shape
        with open(path, "w") as fh:
            fh.write(f"P2\n{w} {h}\n255\n")
            for row in gray:
                fh.write(" ".join(str(v) for v in row))
                fh.write("\n")


def neighbor_sum(data: np.ndarray) -> np.ndarray:
    """Five-point l1-neighborhood sum with zero boundary."""
    padded = np.zeros((data.shape[0] + 2, data.shape[1] + 2), dtype=data.dtype)
    padded[1:-1, 1:-1] = data
    return (
        padded[1:-1, 1:-1]
        + padded[:-2, 1:-1]
        + padded[2:, 1:-1]
        + padded[1:-1, :-2]
        + padded[1:-1, 2:]
    )


def real_field(window: Window) -> GridField:
    return GridField(window, dtype=np.float64)


def count_field(window: Window) -> GridField:
    return GridField(window, dtype=np.int64)
