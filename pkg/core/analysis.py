"""Hypocoercivity functionals, decay-rate fits and relaxation error metrics."""
from __future__ import annotations

import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad, trapezoid
from scipy.stats import linregress

from .errors import (
    InsufficientSamples,
    NoConvergence,
    NonPositiveNorm,
    NonPositiveParameter,
    ParameterOrder,
    PreconditionFailed,
    QuadratureUnresolved,
)
from .grid import Grid, GridFunction, _central, boundary_mass_fraction, dft
from .initial_data import make_initial_data
from .lp import besov_norm_split, band_norms, default_partition
from .models import CorrectorConstants, DecayRecord, RelaxationErrorRecord, SlopeFit, TruncationReport
from .profiles import ContinuousProfile
from .solver import (
    VectorGridFunction,
    damped_mode,
    solve_discrete_heat,
    solve_relaxed_euler,
    spectral_propagate,
)
from .system import SystemSpec, cayley_hamilton_coeffs, norm_equivalence_constant, require_kalman

logger = logging.getLogger(__name__)

LADDER_DELTA = 0.1
BASE_FLOOR = 1e-12
CERTIFICATE_SIGMAS = np.concatenate([[0.0], np.logspace(-4, 4, 321)])
BOUNDARY_MASS_LIMIT = 1e-8
HALVING_RTOL = 0.01
REFINEMENTS = 2


# -------------------------
# Corrector and Lyapunov functional
# -------------------------

def _matrix_powers(A: np.ndarray, n: int) -> List[np.ndarray]:
    out = [np.eye(A.shape[0])]
    for _ in range(1, n):
        out.append(A @ out[-1])
    return out


def corrector(spec: SystemSpec, U: VectorGridFunction, consts: CorrectorConstants) -> float:
    """Σ_k ε_k ⟨BA^{k-1}U, BA^k 𝒟_hU⟩_{l²_h}."""
    h = U.grid.h
    Y = U.as_array()
    DY = _central(Y, h)
    powers = _matrix_powers(spec.A, spec.N)
    total = 0.0
    for k in range(1, spec.N):
        left = spec.B @ powers[k - 1] @ Y
        right = spec.B @ powers[k] @ DY
        total += consts.eps_k[k - 1] * h * float(np.real(np.sum(left * np.conj(right))))
    return total


def lyapunov(spec: SystemSpec, U: VectorGridFunction, t: float, consts: CorrectorConstants) -> float:
    """‖U‖²_{h¹_h} + η₀ t ‖𝒟_hU‖² + corrector."""
    du2 = U.d_central().l2_norm() ** 2
    return U.l2_norm() ** 2 + du2 + consts.eta0 * t * du2 + corrector(spec, U, consts)


def _corrector_form(spec: SystemSpec, eps_k: Sequence[float]) -> np.ndarray:
    """H̃ with corrector(mode) = σ·Û*H̃Û for a single Fourier mode."""
    powers = _matrix_powers(spec.A, spec.N + 1)
    B2 = spec.B @ spec.B
    H = np.zeros((spec.N, spec.N), dtype=complex)
    for k in range(1, spec.N):
        X = powers[k] @ B2 @ powers[k - 1]
        H += eps_k[k - 1] * (-0.5j) * (X - X.T)
    return H


def dissipation_certificate(spec: SystemSpec, consts: CorrectorConstants) -> Tuple[bool, float]:
    """Check, frequency by frequency, that the Lyapunov functional cannot grow.

    Per mode d𝓛/dt <= Û*Q(σ)Û with
    Q = -2(1+σ²)B + 2η₀σ²I - (M*H + HM), M = iσA + B, H = σH̃;
    Q must be negative semidefinite on the sampled σ and in the σ → ∞ limit.
    Returns (ok, worst scaled eigenvalue).
    """
    A, B, N = spec.A, spec.B, spec.N
    Ht = _corrector_form(spec, consts.eps_k)
    eye = np.eye(N)
    worst = -math.inf
    for sigma in CERTIFICATE_SIGMAS:
        M = 1j * sigma * A + B
        H = sigma * Ht
        Q = -2.0 * (1.0 + sigma ** 2) * B + 2.0 * consts.eta0 * sigma ** 2 * eye - (M.conj().T @ H + H @ M)
        scale = max(1.0, float(np.max(np.abs(Q))))
        worst = max(worst, float(np.max(np.linalg.eigvalsh(Q))) / scale)
    Q_inf = -2.0 * B + 2.0 * consts.eta0 * eye - (-1j * A @ Ht + 1j * Ht @ A)
    scale = max(1.0, float(np.max(np.abs(Q_inf))))
    worst = max(worst, float(np.max(np.linalg.eigvalsh(Q_inf))) / scale)
    return worst <= 1e-12, worst


def _constraint_checks(C: float, eps0: float, eps_k: Sequence[float]) -> Dict[str, bool]:
    N = len(eps_k) + 1
    e = [eps0] + list(eps_k)  # e[0] is ε₀
    e1 = C * e[1] ** 2 <= eps0 * eps0 / 8.0 and all(C * e[k] ** 2 <= e[k] * eps0 / 8.0 for k in range(1, N))
    e11 = all(C * e[k] ** 2 <= e[k - 1] * e[k + 1] / 8.0 for k in range(1, N - 1))
    e2 = all(C * e[N - 1] ** 2 <= e[j] * e[N - 2] / 8.0 for j in range(N))
    return {"e1": bool(e1), "e11": bool(e11), "e2": bool(e2)}


def ladder_gap(C: float, N: int, base: float, delta: float = LADDER_DELTA) -> float:
    """Concavity of the exponent ladder, at least ``delta``.

    e11 reads C·ε^{2·gap} <= 1/8, so the gap is widened until it holds at ``base``.
    With N = 2 there is no interior rung and the gap stays at ``delta``.
    """
    if N < 3:
        return delta
    return max(delta, math.log(8.0 * C) / (2.0 * math.log(1.0 / base)))


def choose_corrector_constants(spec: SystemSpec, delta: float = LADDER_DELTA) -> CorrectorConstants:
    """ε_k = ε^{m_k} on a strictly concave ladder; halve ε until every certificate holds."""
    require_kalman(spec)
    N = spec.N
    eps0 = spec.lam / 4.0
    normA = float(np.linalg.norm(spec.A, 2))
    normB = float(np.linalg.norm(spec.B, 2))
    ch = cayley_hamilton_coeffs(spec)
    C = max(1.0, normA, normB) ** (2 * N) * (1.0 + sum(abs(c) for c in ch))
    C2 = norm_equivalence_constant(spec)

    base = min(eps0, 0.5)
    gap = ladder_gap(C, N, base, delta)
    beta = 1.0 + 2.0 * gap * N
    exponents = [1.0 + beta * k - gap * k * k for k in range(1, N)]

    failing = "e1"
    while base >= BASE_FLOOR:
        eps_k = [base ** m for m in exponents]
        if min(eps_k) < np.finfo(float).tiny:
            failing = "ladder"
            break
        eta0 = min([spec.lam] + eps_k) / (8.0 * C2)
        cert = _constraint_checks(C, eps0, eps_k)
        cert["equivalence"] = sum(
            e * normB ** 2 * normA ** (2 * k - 1) for k, e in enumerate(eps_k, start=1)
        ) <= 1.0
        consts = CorrectorConstants(
            eta0=eta0, eps0=eps0, eps_k=eps_k, certificate=cert, base=base,
            exponents=exponents, gap=gap, C=C, C2=C2, lam=spec.lam,
        )
        ok, _ = dissipation_certificate(spec, consts)
        cert["dissipation"] = ok
        if all(cert.values()):
            return consts.model_copy(update={"certificate": cert})
        failing = next(name for name, holds in cert.items() if not holds)
        base /= 2.0
    raise NoConvergence(f"corrector base underflowed while '{failing}' still fails (gap {gap:.3g})",
                        constraint=failing)


# -------------------------
# Decay
# -------------------------

def decay_record(
    spec: SystemSpec,
    U0: VectorGridFunction,
    times: Sequence[float],
    consts: CorrectorConstants | None = None,
) -> DecayRecord:
    consts = consts or choose_corrector_constants(spec)
    sols = spectral_propagate(spec, U0, times)
    norm_u2, norm_dhU, lyap = [], [], []
    for t, U in zip(times, sols):
        norm_u2.append(math.sqrt(sum(U[i].l2_norm() ** 2 for i in range(spec.N1, spec.N))))
        norm_dhU.append(U.d_central().l2_norm())
        lyap.append(lyapunov(spec, U, float(t), consts))
    frac = max(boundary_mass_fraction(c) for c in sols[-1].components)
    if frac > BOUNDARY_MASS_LIMIT:
        logger.warning("%.2e of the final l2 mass sits within 5%% of the window edge", frac)
    h1 = math.sqrt(U0.l2_norm() ** 2 + U0.d_central().l2_norm() ** 2)
    return DecayRecord(
        times=[float(t) for t in times], norm_u2=norm_u2, norm_dhU=norm_dhU,
        lyapunov=lyap, h1_norm_initial=h1, h=U0.grid.h,
    )


def _fit(x: np.ndarray, y: np.ndarray) -> SlopeFit:
    res = linregress(x, y)
    return SlopeFit(slope=float(res.slope), r_squared=float(res.rvalue ** 2),
                    stderr=float(res.stderr), n_samples=int(x.size))


def decay_rate_fit(record: DecayRecord, t_lo: float, t_hi: float) -> SlopeFit:
    """Slope of log(‖U₂‖ + ‖𝒟_hU‖) against log(1+t) on [t_lo, t_hi]."""
    t = np.asarray(record.times)
    total = np.asarray(record.norm_u2) + np.asarray(record.norm_dhU)
    sel = (t >= t_lo) & (t <= t_hi)
    if int(sel.sum()) < 10:
        raise InsufficientSamples(f"{int(sel.sum())} samples in [{t_lo}, {t_hi}], need 10")
    if np.any(total[sel] <= 0):
        raise NonPositiveNorm("norm vanished inside the fit window")
    return _fit(np.log1p(t[sel]), np.log(total[sel]))


def decay_constant(record: DecayRecord) -> float:
    """sup_t (1+t)^{1/2}(‖U₂‖ + ‖𝒟_hU‖) / ‖U₀‖_{h¹_h}."""
    t = np.asarray(record.times)
    total = np.asarray(record.norm_u2) + np.asarray(record.norm_dhU)
    return float(np.max(np.sqrt(1.0 + t) * total) / record.h1_norm_initial)


def exponential_convolution_constant(lam: float, t: float) -> float:
    """(1+t)^{1/2} ∫₀ᵗ e^{-λ(t-τ)} (1+τ)^{-1/2} dτ."""
    val, _ = quad(lambda tau: math.exp(-lam * (t - tau)) / math.sqrt(1.0 + tau), 0.0, t, limit=200)
    return math.sqrt(1.0 + t) * val


# -------------------------
# Relaxation
# -------------------------

def default_relaxation_times(eps: float, T: float, density: int = 1) -> np.ndarray:
    """Geometric samples from deep inside the ε² layer up to T plus a uniform grid on [0, T].

    The geometric part also resolves the heat time scales 1/σ² of every mode,
    which fall between ε² and T.
    """
    if density < 1:
        raise NonPositiveParameter(f"density must be at least 1, got {density}")
    start = min(eps ** 2 * 1e-3, 1e-3 * T)
    layer = np.geomspace(start, T, 800 * density)
    uniform = np.linspace(0.0, T, 200 * density + 1)
    times = np.unique(np.concatenate([[0.0], layer, uniform]))
    times[-1] = T
    return times


def _l1_in_time(times: np.ndarray, values: np.ndarray, label: str) -> float:
    full = float(trapezoid(values, times))
    idx = np.unique(np.concatenate([np.arange(0, times.size, 2), [times.size - 1]]))
    half = float(trapezoid(values[idx], times[idx]))
    if abs(full - half) > HALVING_RTOL * max(abs(full), 1e-300):
        raise QuadratureUnresolved(
            f"{label}: halving the sample density moves the time integral by "
            f"{abs(full - half) / max(abs(full), 1e-300):.2%}"
        )
    return full


def relaxation_errors(
    eps: float,
    grid: Grid,
    T: float,
    s: float = 2.25,
    kappa: float = 0.5,
    sample_times: Sequence[float] | None = None,
    s_prime: float = 3.0,
) -> RelaxationErrorRecord:
    """Distance between the relaxed Euler solution and the discrete heat flow.

    Both start from the bump data (the heat flow from the same density).
    Without ``sample_times`` the default sampling is doubled, up to
    REFINEMENTS times, until every time integral passes the halving check.
    """
    if not 0 < eps < 1:
        raise NonPositiveParameter(f"eps must lie in (0, 1), got {eps}")
    if not 2 < s < s_prime:
        raise ParameterOrder(f"need 2 < s < s', got s={s}, s'={s_prime}")
    if kappa <= 0 or T <= 0:
        raise NonPositiveParameter("kappa and T must be positive")
    if sample_times is not None:
        return _relaxation_record(eps, grid, T, s, kappa, np.asarray(sample_times, float))
    for level in range(REFINEMENTS):
        try:
            return _relaxation_record(eps, grid, T, s, kappa, default_relaxation_times(eps, T, 2 ** level))
        except QuadratureUnresolved as e:
            logger.info("eps=%g: refining time samples (%s)", eps, e)
    return _relaxation_record(eps, grid, T, s, kappa, default_relaxation_times(eps, T, 2 ** REFINEMENTS))


def _relaxation_record(eps: float, grid: Grid, T: float, s: float, kappa: float,
                       times: np.ndarray) -> RelaxationErrorRecord:
    if times[0] != 0.0 or abs(times[-1] - T) > 1e-12 * T:
        raise PreconditionFailed("sample times must run from 0 to T")

    rho0, u0 = make_initial_data("relax_data", grid)
    relaxed = solve_relaxed_euler(eps, rho0, u0, times)
    heat = solve_discrete_heat(rho0, times)
    p = default_partition(grid)
    js = np.arange(p.geometry.j_min, p.geometry.j_max + 1)
    w_s, w_s1, w_s2 = (2.0 ** (js * r) for r in (s, s - 1.0, s - 2.0))

    err_besov = np.empty(times.size)
    darcy_besov = np.empty(times.size)
    darcy_linf = np.empty(times.size)
    for i, ((rho_e, u_e), (rho, _)) in enumerate(zip(relaxed, heat)):
        diff = rho_e - rho
        w = damped_mode(rho_e, u_e)
        err_besov[i] = float(np.sum(w_s * band_norms(diff, p)))
        darcy_besov[i] = float(np.sum(w_s1 * band_norms(w, p)))
        darcy_linf[i] = w.linf_norm()

    frac = boundary_mass_fraction(relaxed[-1][0])
    if frac > BOUNDARY_MASS_LIMIT:
        logger.warning("eps=%g: %.2e of the final density mass is near the window edge", eps, frac)

    final_diff = relaxed[-1][0] - heat[-1][0]
    low, high = besov_norm_split(final_diff, s - 2.0, kappa, eps, p)
    return RelaxationErrorRecord(
        eps=eps,
        h=grid.h,
        T=T,
        sup_error_besov=float(np.sum(w_s2 * band_norms(final_diff, p))),
        l1t_error_besov=_l1_in_time(times, err_besov, "l1t_besov"),
        darcy_l1t=_l1_in_time(times, darcy_besov, "darcy_besov"),
        sup_error_linf=final_diff.linf_norm(),
        darcy_l1t_linf=_l1_in_time(times, darcy_linf, "darcy_linf"),
        s=s,
        kappa=kappa,
        sup_split_low=low,
        sup_split_high=high,
    )


def convergence_order(records: Sequence[RelaxationErrorRecord]) -> Dict[str, SlopeFit]:
    """log-log slope of each error column against ε."""
    eps = np.array([r.eps for r in records])
    if np.unique(eps).size < 4:
        raise InsufficientSamples(f"need at least 4 distinct eps values, got {np.unique(eps).size}")
    if len({(r.h, r.T) for r in records}) != 1:
        raise PreconditionFailed("records must share h and T")
    fits: Dict[str, SlopeFit] = {}
    for col in records[0].columns():
        vals = np.array([r.columns()[col] for r in records])
        if np.any(vals <= 0):
            raise NonPositiveNorm(f"column {col} has non-positive entries")
        fits[col] = _fit(np.log(eps), np.log(vals))
    return fits


def local_orders(records: Sequence[RelaxationErrorRecord], column: str) -> List[float]:
    """Orders log(e_a/e_b)/log(ε_a/ε_b) between neighbouring ε, largest ε first."""
    ordered = sorted(records, key=lambda r: r.eps, reverse=True)
    if len(ordered) < 2:
        raise InsufficientSamples("need at least 2 records for a local order")
    out = []
    for a, b in zip(ordered, ordered[1:]):
        va, vb = a.columns()[column], b.columns()[column]
        if va <= 0 or vb <= 0:
            raise NonPositiveNorm(f"column {column} has non-positive entries")
        out.append(math.log(va / vb) / math.log(a.eps / b.eps))
    return out


def h_truncation_check(
    rho0_star: ContinuousProfile,
    u0_star: ContinuousProfile,
    rho0: ContinuousProfile,
    s_prime: float,
    eps: float,
    discrete: Optional[Tuple[GridFunction, GridFunction, GridFunction]] = None,
) -> TruncationReport:
    """Admissibility of (ρ₀*, u₀*, ρ₀) as (s', h)-truncated data of order ε².

    ``discrete`` optionally carries the grid data (ρ₀, ρ₀*, u₀*) to confirm that
    each is the truncation of its profile; without it that holds by construction.
    """
    if s_prime <= 2:
        raise ParameterOrder(f"need s' > 2, got {s_prime}")
    rho0_star.sobolev_norm(s_prime)
    u0_star.sobolev_norm(s_prime)
    rho0.sobolev_norm(s_prime - 2.0)
    discrepancy = 0.0 if rho0 is rho0_star else (rho0 - rho0_star).sobolev_norm(s_prime - 2.0)
    threshold = eps ** 2
    conditions = {"close": discrepancy < threshold}
    labels = ("rho0", "rho0_star", "u0_star")
    profiles = (rho0, rho0_star, u0_star)
    for label, prof, idx in zip(labels, profiles, range(3)):
        conditions[label] = True if discrete is None else _is_truncation(discrete[idx], prof)
    return TruncationReport(
        admissible=all(conditions.values()),
        discrepancy=discrepancy,
        threshold=threshold,
        conditions=conditions,
    )


def _is_truncation(v: GridFunction, prof: ContinuousProfile, rtol: float = 1e-9) -> bool:
    grid = v.grid
    target = np.asarray(prof.transform(grid.frequencies()), dtype=complex)
    got = dft(v).coeffs
    keep = np.ones(grid.n_points, dtype=bool)
    keep[0] = False  # the unpaired Nyquist mode only keeps its real-compatible part
    err = float(np.max(np.abs(got[keep] - target[keep])))
    return err <= rtol * max(1.0, float(np.max(np.abs(target))))
