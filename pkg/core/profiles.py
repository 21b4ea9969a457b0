from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from scipy.integrate import fixed_quad

from .errors import RegularityFail

SQRT_2PI = math.sqrt(2.0 * math.pi)

Transform = Callable[[np.ndarray], np.ndarray]


def continuous_sobolev_norm(
    f_hat: Transform,
    s: float,
    xi_max: float = 1e6,
    rtol: float = 1e-12,
    nodes: int = 128,
) -> float:
    """‖f‖_{H^s(ℝ)} = (∫ (1+|ξ|^{2s}) |f̂(ξ)|² dξ)^{1/2}, integrated over doubling chunks.

    Raises RegularityFail when the chunk contributions have not died out by ``xi_max``.
    """

    def density(xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        power = np.abs(np.asarray(f_hat(xi))) ** 2 + np.abs(np.asarray(f_hat(-xi))) ** 2
        return (1.0 + xi ** (2.0 * s)) * power

    total = float(fixed_quad(density, 0.0, 1.0, n=nodes)[0])
    a = 1.0
    while a < xi_max:
        piece = float(fixed_quad(density, a, 2.0 * a, n=nodes)[0])
        total += piece
        if a >= 16.0 and piece <= rtol * total:
            return math.sqrt(total)
        a *= 2.0
    raise RegularityFail(f"H^{s} norm does not converge by |ξ| = {xi_max:g}")


@dataclass(frozen=True)
class ContinuousProfile:
    """A function on ℝ together with its unitary Fourier transform."""

    name: str
    func: Callable[[np.ndarray], np.ndarray]
    transform: Transform
    support: Tuple[float, float] = (-math.inf, math.inf)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.func(np.asarray(x, dtype=float))

    def sobolev_norm(self, s: float) -> float:
        return continuous_sobolev_norm(self.transform, s)

    def scaled(self, c: float) -> "ContinuousProfile":
        return ContinuousProfile(
            name=f"{c:g}*{self.name}",
            func=lambda x: c * self.func(x),
            transform=lambda xi: c * self.transform(xi),
            support=self.support,
        )

    def __add__(self, other: "ContinuousProfile") -> "ContinuousProfile":
        return ContinuousProfile(
            name=f"{self.name}+{other.name}",
            func=lambda x: self.func(x) + other.func(x),
            transform=lambda xi: self.transform(xi) + other.transform(xi),
            support=(min(self.support[0], other.support[0]), max(self.support[1], other.support[1])),
        )

    def __sub__(self, other: "ContinuousProfile") -> "ContinuousProfile":
        return self + other.scaled(-1.0)


def gaussian_profile(width: float = 1.0) -> ContinuousProfile:
    """e^{-x²/(2w²)} with transform w·e^{-w²ξ²/2}."""
    return ContinuousProfile(
        name="gaussian",
        func=lambda x: np.exp(-0.5 * (np.asarray(x) / width) ** 2),
        transform=lambda xi: width * np.exp(-0.5 * (width * np.asarray(xi)) ** 2) + 0j,
    )


def box_profile(half_width: float = 1.0) -> ContinuousProfile:
    """Indicator of [-a, a]; only in H^s for s < 1/2."""
    a = half_width

    def transform(xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        return (2.0 * a / SQRT_2PI) * np.sinc(a * xi / math.pi) + 0j

    return ContinuousProfile(
        name="box",
        func=lambda x: (np.abs(np.asarray(x)) <= a).astype(float),
        transform=transform,
        support=(-a, a),
    )
