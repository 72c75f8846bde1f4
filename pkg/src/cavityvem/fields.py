"""Closed-form displacement fields used as interpolation and solver targets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["AnalyticField", "cavity_mode", "gradient_bubble"]


@dataclass(frozen=True)
class AnalyticField:
    """A smooth vector field with its divergence, both vectorized over points.

    ``values(pts)`` maps (n, 2) points to (n, 2) vectors; ``divergence(pts)``
    maps (n, 2) points to (n,) scalars. ``eigenvalue`` is set for fields that
    are eigenmodes of the cavity problem (None otherwise).
    """

    values: Callable[[np.ndarray], np.ndarray]
    divergence: Callable[[np.ndarray], np.ndarray]
    name: str = "field"
    eigenvalue: float | None = None


def cavity_mode(n: int, m: int, a: float = 1.0, b: float = 1.0) -> AnalyticField:
    """Eigenmode (n, m) of the rigid rectangular cavity [0, a] x [0, b].

    The displacement is the gradient of cos(n pi x / a) cos(m pi y / b)
    scaled by -1/pi, so its normal trace vanishes on the boundary and
    div w = pi ((n/a)^2 + (m/b)^2) cos(n pi x / a) cos(m pi y / b).
    """
    if n < 0 or m < 0 or n + m == 0:
        raise ValueError("mode indices must be nonnegative and not both zero")
    kx = n * np.pi / a
    ky = m * np.pi / b

    def values(pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        x, y = pts[:, 0], pts[:, 1]
        return np.column_stack(
            [
                (n / a) * np.sin(kx * x) * np.cos(ky * y),
                (m / b) * np.cos(kx * x) * np.sin(ky * y),
            ]
        )

    def divergence(pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        x, y = pts[:, 0], pts[:, 1]
        return np.pi * ((n / a) ** 2 + (m / b) ** 2) * np.cos(kx * x) * np.cos(ky * y)

    lam = np.pi**2 * ((n / a) ** 2 + (m / b) ** 2)
    return AnalyticField(values, divergence, name=f"mode({n},{m})", eigenvalue=lam)


def gradient_bubble(a: float = 1.0, b: float = 1.0) -> AnalyticField:
    """A smooth rotor-free field with nonpolynomial divergence, not an eigenmode."""

    def values(pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        x, y = pts[:, 0] / a, pts[:, 1] / b
        gx = np.exp(x) * np.sin(np.pi * y) / a
        gy = np.pi * np.exp(x) * np.cos(np.pi * y) / b
        return np.column_stack([gx, gy])

    def divergence(pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        x, y = pts[:, 0] / a, pts[:, 1] / b
        return np.exp(x) * np.sin(np.pi * y) * (1.0 / a**2 - np.pi**2 / b**2)

    return AnalyticField(values, divergence, name="gradient_bubble")
