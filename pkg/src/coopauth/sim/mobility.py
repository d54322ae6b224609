"""Manhattan-grid mobility on a torus.

Roads are the lines x = k*spacing and y = k*spacing. Each vehicle keeps a
constant speed, and at every intersection picks straight, left or right with
equal probability (no U-turns).
"""

from __future__ import annotations

import math
import random

import numpy as np

HEADINGS = {(0, 1): 0.0, (1, 1): math.pi / 2, (0, -1): math.pi, (1, -1): 3 * math.pi / 2}


class GridMobility:
    """Positions of ``n`` vehicles. ``axis`` 0 moves along x, 1 along y."""

    def __init__(self, n: int, area: float, spacing: float, speed_range: tuple[float, float], rng: random.Random):
        self.area = area
        self.spacing = spacing
        self.lines = round(area / spacing)
        self.rng = rng
        self.axis = [0] * n
        self.direction = [1] * n
        self.along = [0.0] * n  # coordinate on the moving axis
        self.line = [0.0] * n  # fixed coordinate of the road
        self.speed = [0.0] * n
        lo, hi = speed_range
        for i in range(n):
            self.axis[i] = rng.randrange(2)
            self.direction[i] = rng.choice((1, -1))
            self.line[i] = rng.randrange(self.lines) * spacing
            self.along[i] = rng.random() * area
            self.speed[i] = rng.uniform(lo, hi)
        self.xs = np.zeros(n)
        self.ys = np.zeros(n)
        self._sync()

    def _sync(self) -> None:
        for i, (ax, s, c) in enumerate(zip(self.axis, self.along, self.line)):
            if ax == 0:
                self.xs[i], self.ys[i] = s, c
            else:
                self.xs[i], self.ys[i] = c, s

    def position(self, i: int) -> tuple[float, float]:
        return float(self.xs[i]), float(self.ys[i])

    def heading(self, i: int) -> float:
        return HEADINGS[self.axis[i], self.direction[i]]

    def _next_intersection(self, s: float, d: int) -> float:
        k = s / self.spacing
        return (math.floor(k) + 1) * self.spacing if d > 0 else (math.ceil(k) - 1) * self.spacing

    def step(self, dt: float) -> None:
        for i in range(len(self.speed)):
            remaining = self.speed[i] * dt
            s, d = self.along[i], self.direction[i]
            while True:
                target = self._next_intersection(s, d)
                gap = abs(target - s)
                if remaining < gap:
                    s += d * remaining
                    break
                remaining -= gap
                # at intersection: target on this axis, self.line on the other
                choice = self.rng.randrange(3)
                if choice == 0:
                    s = target % self.area
                    continue
                crossing = target % self.area
                new_d = 1 if choice == 1 else -1
                s, self.line[i] = self.line[i], crossing
                self.axis[i] ^= 1
                d = new_d
            self.along[i] = s % self.area
            self.direction[i] = d
        self._sync()

    def neighbors(self, i: int, radius: float) -> np.ndarray:
        """Indices of vehicles within ``radius`` of vehicle ``i`` (closed disk, torus metric)."""
        dx = np.abs(self.xs - self.xs[i])
        dy = np.abs(self.ys - self.ys[i])
        dx = np.minimum(dx, self.area - dx)
        dy = np.minimum(dy, self.area - dy)
        mask = dx * dx + dy * dy <= radius * radius
        mask[i] = False
        return np.flatnonzero(mask)
