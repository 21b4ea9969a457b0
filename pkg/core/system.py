from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .errors import (
    BadBlockStructure,
    KalmanFails,
    NonSymmetric,
    NotDissipative,
    NumericOverflow,
    PreconditionFailed,
)
from .models import KalmanCertificate

MAX_DIMENSION = 16
SYMMETRY_RTOL = 1e-12

EULER_A = [[0.0, 1.0], [1.0, 0.0]]
EULER_B = [[0.0, 0.0], [0.0, 1.0]]


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """Validated pair for ∂tU + A∂xU = -BU with B = diag(0, B_tilde)."""

    A: np.ndarray
    B: np.ndarray
    N: int
    N2: int
    lam: float

    @property
    def N1(self) -> int:
        return self.N - self.N2

    @property
    def B_tilde(self) -> np.ndarray:
        return self.B[self.N1:, self.N1:]


def _as_square(M: Sequence[Sequence[float]] | np.ndarray, name: str) -> np.ndarray:
    arr = np.array(M, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise PreconditionFailed(f"{name} must be a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise PreconditionFailed(f"{name} has non-finite entries")
    return arr


def validate_system(A, B, N2: int) -> SystemSpec:
    A = _as_square(A, "A")
    B = _as_square(B, "B")
    if A.shape != B.shape:
        raise PreconditionFailed(f"A is {A.shape} but B is {B.shape}")
    N = A.shape[0]
    if not 2 <= N <= MAX_DIMENSION:
        raise PreconditionFailed(f"state dimension must be in [2, {MAX_DIMENSION}], got {N}")
    if not 1 <= N2 < N:
        raise PreconditionFailed(f"N2 must satisfy 1 <= N2 < N={N}, got {N2}")

    for name, M in (("A", A), ("B", B)):
        scale = max(1.0, float(np.max(np.abs(M))))
        if np.max(np.abs(M - M.T)) > SYMMETRY_RTOL * scale:
            raise NonSymmetric(f"{name} is not symmetric")

    N1 = N - N2
    if np.any(B[:N1, :] != 0.0) or np.any(B[:, :N1] != 0.0):
        raise BadBlockStructure(f"B has nonzero entries outside its trailing {N2}x{N2} block")

    B_tilde = B[N1:, N1:]
    lam = float(np.min(np.linalg.eigvalsh(B_tilde)))
    if lam <= 0.0:
        raise NotDissipative(f"smallest eigenvalue of the dissipative block is {lam:.3g} <= 0")

    A.setflags(write=False)
    B.setflags(write=False)
    return SystemSpec(A=A, B=B, N=N, N2=int(N2), lam=lam)


def builtin_system(name: str) -> SystemSpec:
    if name == "euler":
        return validate_system(EULER_A, EULER_B, 1)
    raise PreconditionFailed(f"unknown builtin system '{name}'")


def random_system(rng: np.random.Generator, N: int, N2: int) -> SystemSpec:
    """Random symmetric A with a positive definite trailing block in B."""
    M = rng.standard_normal((N, N))
    A = (M + M.T) / 2.0
    G = rng.standard_normal((N2, N2))
    B = np.zeros((N, N))
    B[N - N2:, N - N2:] = G @ G.T + 0.5 * np.eye(N2)
    return validate_system(A, B, N2)


# -------------------------
# Kalman condition
# -------------------------

def _kalman_blocks(spec: SystemSpec) -> List[np.ndarray]:
    blocks = [spec.B.copy()]
    for _ in range(1, spec.N):
        blocks.append(spec.A @ blocks[-1])
    return blocks


def kalman_matrix(spec: SystemSpec) -> np.ndarray:
    """(B | AB | … | A^{N-1}B), shape N x N·N."""
    K = np.hstack(_kalman_blocks(spec))
    if not np.all(np.isfinite(K)):
        raise NumericOverflow("Kalman matrix overflowed")
    return K


def kalman_rank_holds(spec: SystemSpec, tol: float | None = None) -> KalmanCertificate:
    K = kalman_matrix(spec)
    sv = np.linalg.svd(K, compute_uv=False)
    if tol is None:
        tol = spec.N * np.finfo(float).eps
    top = float(sv[0]) if sv.size else 0.0
    rank = int(np.sum(sv > tol * top)) if top > 0 else 0
    return KalmanCertificate(
        K_matrix=K.tolist(),
        numerical_rank=rank,
        singular_values=[float(s) for s in sv],
        holds=rank == spec.N,
    )


def require_kalman(spec: SystemSpec) -> KalmanCertificate:
    cert = kalman_rank_holds(spec)
    if not cert.holds:
        raise KalmanFails(f"Kalman rank {cert.numerical_rank} < {spec.N}")
    return cert


def cayley_hamilton_coeffs(spec: SystemSpec) -> List[float]:
    """c^0..c^{N-1} with A^N = Σ_j c^j A^j."""
    # np.poly: λ^N + a_1 λ^{N-1} + … + a_N, so c^j = -a_{N-j}
    a = np.poly(np.linalg.eigvalsh(spec.A)).real
    return [float(-a[spec.N - j]) for j in range(spec.N)]


# -------------------------
# Norm equivalence
# -------------------------

def _kalman_gram(spec: SystemSpec) -> np.ndarray:
    G = np.zeros((spec.N, spec.N))
    P = np.eye(spec.N)
    for _ in range(spec.N):
        BAk = spec.B @ P
        G += BAk.T @ BAk
        P = spec.A @ P
    return G


def kalman_norm(spec: SystemSpec, y: np.ndarray) -> float:
    """N(y) = (Σ_{k<N} |BA^k y|²)^{1/2}; a norm exactly when the Kalman condition holds."""
    y = np.asarray(y)
    return float(np.sqrt(np.real(np.conj(y) @ _kalman_gram(spec) @ y)))


def norm_equivalence_constant(spec: SystemSpec) -> float:
    """Smallest C2 with |y|² <= C2·N(y)² for all y."""
    lam_min = float(np.min(np.linalg.eigvalsh(_kalman_gram(spec))))
    if lam_min <= 0.0:
        raise KalmanFails("Kalman norm degenerates: Gram matrix is singular")
    return 1.0 / lam_min
