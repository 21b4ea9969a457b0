from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Sequence, Tuple

import numpy as np
import scipy.linalg

from .errors import (
    GridMismatch,
    NonFinite,
    NonPositiveParameter,
    PreconditionFailed,
    StiffnessGuard,
)
from .grid import (
    Grid,
    GridFunction,
    _central,
    d_central,
    dft,
    spectral_values,
    symbol,
)
from .models import StabilityReport
from .system import SystemSpec

logger = logging.getLogger(__name__)

EIGVEC_COND_LIMIT = 1e8
STABILITY_TOL = 1e-10
MAX_LOG_FLOAT = math.log(np.finfo(float).max)
DEFAULT_STABILITY_GRID = Grid(h=2.0 ** -4, n_points=256)

RHS = Callable[[float, np.ndarray], np.ndarray]


# -------------------------
# Vector-valued grid functions
# -------------------------

@dataclass(frozen=True, eq=False)
class VectorGridFunction:
    components: Tuple[GridFunction, ...]

    def __post_init__(self) -> None:
        comps = tuple(self.components)
        if not comps:
            raise PreconditionFailed("need at least one component")
        for c in comps[1:]:
            if c.grid != comps[0].grid:
                raise GridMismatch("components live on different grids")
        object.__setattr__(self, "components", comps)

    @classmethod
    def from_array(cls, grid: Grid, values: np.ndarray) -> "VectorGridFunction":
        return cls(tuple(GridFunction(grid, row) for row in np.asarray(values)))

    @property
    def grid(self) -> Grid:
        return self.components[0].grid

    @property
    def N(self) -> int:
        return len(self.components)

    @property
    def is_real(self) -> bool:
        return all(c.is_real for c in self.components)

    def as_array(self) -> np.ndarray:
        return np.vstack([c.values for c in self.components])

    def l2_norm(self) -> float:
        return math.sqrt(sum(c.l2_norm() ** 2 for c in self.components))

    def d_central(self) -> "VectorGridFunction":
        return VectorGridFunction(tuple(d_central(c) for c in self.components))

    def __getitem__(self, i: int) -> GridFunction:
        return self.components[i]

    def __sub__(self, other: "VectorGridFunction") -> "VectorGridFunction":
        return VectorGridFunction(tuple(a - b for a, b in zip(self.components, other.components)))


# -------------------------
# Exact per-mode propagation
# -------------------------

@dataclass(frozen=True, eq=False)
class PropagatorCache:
    """Per-mode generators M_k with their eigendecompositions.

    Modes whose eigenvector matrix is worse conditioned than 1e8 fall back to
    scipy.linalg.expm (scaling and squaring).
    """

    grid: Grid
    generators: np.ndarray  # (n_points, N, N)
    eigvals: np.ndarray = field(init=False, repr=False)
    eigvecs: np.ndarray = field(init=False, repr=False)
    eigvecs_inv: np.ndarray = field(init=False, repr=False)
    fallback: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        G = np.asarray(self.generators, dtype=complex)
        w, V = np.linalg.eig(G)
        with np.errstate(all="ignore"):
            cond = np.linalg.cond(V)
        bad = ~np.isfinite(cond) | (cond > EIGVEC_COND_LIMIT)
        Vinv = np.zeros_like(V)
        good = ~bad
        if np.any(good):
            Vinv[good] = np.linalg.inv(V[good])
        if np.any(bad):
            logger.debug("expm fallback on %d of %d modes", int(bad.sum()), bad.size)
        for name, val in (("generators", G), ("eigvals", w), ("eigvecs", V),
                          ("eigvecs_inv", Vinv), ("fallback", bad)):
            object.__setattr__(self, name, val)

    @classmethod
    def for_system(cls, spec: SystemSpec, grid: Grid) -> "PropagatorCache":
        sigma = symbol(grid)
        G = -1j * sigma[:, None, None] * spec.A[None, :, :] - spec.B[None, :, :]
        return cls(grid, G)

    def exp(self, t: float) -> np.ndarray:
        """exp(M_k t) for every mode, shape (n_points, N, N)."""
        out = np.einsum("kij,kj,kjl->kil", self.eigvecs, np.exp(self.eigvals * t), self.eigvecs_inv)
        if np.any(self.fallback):
            out[self.fallback] = scipy.linalg.expm(self.generators[self.fallback] * t)
        return out

    def apply(self, coeffs: np.ndarray, t: float) -> np.ndarray:
        """Propagate spectral coefficients of shape (N, n_points) to time t."""
        c = np.asarray(coeffs, dtype=complex).T  # (n, N)
        a = np.einsum("kij,kj->ki", self.eigvecs_inv, c)
        out = np.einsum("kij,kj->ki", self.eigvecs, np.exp(self.eigvals * t) * a)
        if np.any(self.fallback):
            E = scipy.linalg.expm(self.generators[self.fallback] * t)
            out[self.fallback] = np.einsum("kij,kj->ki", E, c[self.fallback])
        return out.T


def _check_times(times: Sequence[float]) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise PreconditionFailed("times must be a non-empty list")
    if t[0] < 0 or np.any(np.diff(t) < 0):
        raise PreconditionFailed("times must be ascending and non-negative")
    return t


def _propagate(cache: PropagatorCache, u0: VectorGridFunction,
               times: Sequence[float]) -> List[VectorGridFunction]:
    t = _check_times(times)
    grid = u0.grid
    if cache.grid != grid:
        raise GridMismatch("propagator was built for another grid")
    c0 = np.vstack([dft(c).coeffs for c in u0.components])
    like = u0.components[0] if u0.is_real else None
    out: List[VectorGridFunction] = []
    for ti in t:
        ct = cache.apply(c0, float(ti))
        out.append(VectorGridFunction(tuple(spectral_values(grid, row, like=like) for row in ct)))
    return out


def spectral_propagate(spec: SystemSpec, u0: VectorGridFunction,
                       times: Sequence[float]) -> List[VectorGridFunction]:
    """Exact solution of ∂tU + A𝒟_hU + BU = 0 at each requested time."""
    if u0.N != spec.N:
        raise PreconditionFailed(f"system has {spec.N} components, data has {u0.N}")
    return _propagate(PropagatorCache.for_system(spec, u0.grid), u0, times)


def relaxed_euler_cache(eps: float, grid: Grid) -> PropagatorCache:
    sigma = symbol(grid)
    G = np.zeros((grid.n_points, 2, 2), dtype=complex)
    G[:, 0, 1] = -1j * sigma
    G[:, 1, 0] = -1j * sigma / eps ** 2
    G[:, 1, 1] = -1.0 / eps ** 2
    return PropagatorCache(grid, G)


def solve_relaxed_euler(eps: float, rho0: GridFunction, u0: GridFunction,
                        times: Sequence[float]) -> List[Tuple[GridFunction, GridFunction]]:
    """∂tρ + 𝒟_h u = 0, ε²∂t u + 𝒟_h ρ + u = 0, solved mode by mode."""
    if not 0 < eps <= 1:
        raise NonPositiveParameter(f"eps must lie in (0, 1], got {eps}")
    U0 = VectorGridFunction((rho0, u0))
    sols = _propagate(relaxed_euler_cache(eps, U0.grid), U0, times)
    return [(s[0], s[1]) for s in sols]


def solve_discrete_heat(rho0: GridFunction,
                        times: Sequence[float]) -> List[Tuple[GridFunction, GridFunction]]:
    """∂tρ = 𝒟_h²ρ with the Darcy velocity u = -𝒟_hρ."""
    t = _check_times(times)
    c0 = dft(rho0).coeffs
    sig2 = symbol(rho0.grid) ** 2
    out: List[Tuple[GridFunction, GridFunction]] = []
    for ti in t:
        rho = spectral_values(rho0.grid, c0 * np.exp(-sig2 * ti), like=rho0)
        out.append((rho, -d_central(rho)))
    return out


def damped_mode(rho: GridFunction, u: GridFunction) -> GridFunction:
    """w = 𝒟_hρ + u."""
    if rho.grid != u.grid:
        raise GridMismatch("rho and u live on different grids")
    return d_central(rho) + u


# -------------------------
# RK4 oracle
# -------------------------

def system_rhs(spec: SystemSpec, h: float) -> RHS:
    A, B = spec.A, spec.B

    def rhs(t: float, Y: np.ndarray) -> np.ndarray:
        return -(A @ _central(Y, h)) - B @ Y

    return rhs


def relaxed_euler_rhs(eps: float, h: float) -> RHS:
    def rhs(t: float, Y: np.ndarray) -> np.ndarray:
        rho, u = Y
        return np.vstack([-_central(u, h), -(_central(rho, h) + u) / eps ** 2])

    return rhs


def heat_rhs(h: float) -> RHS:
    def rhs(t: float, Y: np.ndarray) -> np.ndarray:
        return _central(_central(Y, h), h)

    return rhs


def rk4_evolve(
    rhs: RHS,
    u0: np.ndarray | VectorGridFunction,
    dt: float,
    T: float,
    sample_times: Sequence[float],
    eps: float | None = None,
) -> list:
    """Classical RK4 with fixed step; samples by cubic Hermite interpolation inside a step.

    With ``eps`` the relaxed Euler stiffness guard dt <= ε²/4 applies.
    """
    if dt <= 0 or T < 0:
        raise NonPositiveParameter(f"need dt > 0 and T >= 0, got dt={dt}, T={T}")
    if eps is not None and dt > eps ** 2 / 4.0:
        raise StiffnessGuard(f"dt={dt:g} exceeds eps^2/4={eps ** 2 / 4.0:g}")
    samples = _check_times(sample_times)
    if samples[-1] > T * (1 + 1e-12):
        raise PreconditionFailed("sample times must not exceed T")

    grid = u0.grid if isinstance(u0, VectorGridFunction) else None
    if grid is not None:
        y = u0.as_array().astype(float if u0.is_real else complex)
    else:
        y = np.array(u0, dtype=float if np.isrealobj(u0) else complex)
    n_steps = max(1, int(math.ceil(T / dt - 1e-9))) if T > 0 else 0
    step = T / n_steps if n_steps else 0.0

    results: list = [None] * samples.size
    order = np.argsort(samples, kind="stable")
    pos = 0
    t = 0.0
    f = rhs(t, y)

    def emit(idx: int, val: np.ndarray) -> None:
        results[idx] = VectorGridFunction.from_array(grid, val) if grid is not None else val

    for k in range(n_steps + 1):
        while pos < samples.size and samples[order[pos]] <= t + 1e-12 * max(1.0, T):
            emit(order[pos], y.copy())
            pos += 1
        if k == n_steps or pos == samples.size:
            break
        k1 = f
        k2 = rhs(t + step / 2, y + step / 2 * k1)
        k3 = rhs(t + step / 2, y + step / 2 * k2)
        k4 = rhs(t + step, y + step * k3)
        y_next = y + step / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y_next)):
            raise NonFinite(f"RK4 diverged at t={t + step:g}")
        f_next = rhs(t + step, y_next)
        t_next = (k + 1) * step
        while pos < samples.size and samples[order[pos]] < t_next - 1e-12 * max(1.0, T):
            theta = (samples[order[pos]] - t) / step
            h00 = 2 * theta ** 3 - 3 * theta ** 2 + 1
            h10 = theta ** 3 - 2 * theta ** 2 + theta
            h01 = -2 * theta ** 3 + 3 * theta ** 2
            h11 = theta ** 3 - theta ** 2
            emit(order[pos], h00 * y + h10 * step * f + h01 * y_next + h11 * step * f_next)
            pos += 1
        y, f, t = y_next, f_next, t_next
    return results


# -------------------------
# Stability of one-sided and central schemes
# -------------------------

def _scheme_symbol(scheme: str, xi: np.ndarray, h: float) -> np.ndarray:
    if scheme == "plus":
        return (np.exp(1j * xi * h) - 1.0) / h
    if scheme == "minus":
        return (1.0 - np.exp(-1j * xi * h)) / h
    if scheme == "central":
        return 1j * np.sin(xi * h) / h
    raise PreconditionFailed(f"unknown scheme '{scheme}' (plus, minus, central)")


def _log_norm_expm(G: np.ndarray, T: float) -> np.ndarray:
    """log‖exp(G·T)‖₂ for a stack of matrices, finite where the norm itself overflows.

    Scaling and squaring with the norm pulled out before each squaring:
    exp(GT) = (e^L·E)^{2^r} holds after every step.
    """
    M = G * T
    rho = float(np.max(np.linalg.norm(M, ord=2, axis=(1, 2))))
    p = math.ceil(math.log2(rho)) if rho > 1.0 else 0
    E = scipy.linalg.expm(M / 2.0 ** p)
    L = np.zeros(M.shape[0])
    for _ in range(p):
        n = np.linalg.norm(E, ord=2, axis=(1, 2))
        E = E / n[:, None, None]
        L = 2.0 * (L + np.log(n))
        E = E @ E
    return L + np.log(np.linalg.norm(E, ord=2, axis=(1, 2)))


def stability_report(
    scheme: str,
    system: SystemSpec | Tuple[np.ndarray, np.ndarray],
    T: float,
    grid: Grid | None = None,
) -> StabilityReport:
    """Largest ‖exp((-s(ξ)A - B)T)‖₂ over the discrete modes, s the scheme's symbol.

    ``system`` may also be a raw (A, B) pair so that scalar and undamped
    examples can be checked too.
    """
    if T <= 0:
        raise NonPositiveParameter(f"T must be positive, got {T}")
    grid = grid or DEFAULT_STABILITY_GRID
    if isinstance(system, SystemSpec):
        A, B = system.A, system.B
    else:
        A, B = (np.atleast_2d(np.asarray(m, dtype=float)) for m in system)
    xi = grid.frequencies()
    s = _scheme_symbol(scheme, xi, grid.h)
    G = -s[:, None, None] * A[None, :, :] - B[None, :, :]
    log_amps = _log_norm_expm(G, T)
    worst = int(np.argmax(log_amps))
    top = float(log_amps[worst])
    return StabilityReport(
        scheme=scheme,
        max_amplification=math.exp(top) if top < MAX_LOG_FLOAT else math.inf,
        log_amplification=top,
        stable=top <= math.log1p(STABILITY_TOL),
        worst_frequency=float(xi[worst]),
    )


def energy_balance_residual(spec: SystemSpec, trajectory: Sequence[VectorGridFunction],
                            times: Sequence[float]) -> float:
    """max over t of ‖U(t)‖² - ‖U(t₀)‖² + 2λ∫_{t₀}^t ‖U₂‖², trapezoid in time.

    Non-positive up to quadrature error for every solution.
    """
    t = np.asarray(times, dtype=float)
    energy = np.array([u.l2_norm() ** 2 for u in trajectory])
    damped = np.array([
        sum(u[i].l2_norm() ** 2 for i in range(spec.N1, spec.N)) for u in trajectory
    ])
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (damped[1:] + damped[:-1]) * np.diff(t))])
    return float(np.max(energy - energy[0] + 2.0 * spec.lam * cum))

