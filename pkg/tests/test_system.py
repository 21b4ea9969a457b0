from __future__ import annotations

import numpy as np
import pytest

from core.errors import BadBlockStructure, KalmanFails, NonSymmetric, NotDissipative, PreconditionFailed
from core.system import (
    builtin_system,
    cayley_hamilton_coeffs,
    kalman_matrix,
    kalman_norm,
    kalman_rank_holds,
    norm_equivalence_constant,
    random_system,
    require_kalman,
    validate_system,
)


def test_euler_pair_validates(euler):
    assert euler.N == 2 and euler.N2 == 1 and euler.N1 == 1
    assert euler.lam == pytest.approx(1.0)
    np.testing.assert_array_equal(euler.B_tilde, [[1.0]])


@pytest.mark.parametrize(
    "A, B, N2, exc",
    [
        ([[0, 1], [2, 0]], [[0, 0], [0, 1]], 1, NonSymmetric),
        ([[0, 1], [1, 0]], [[0, 1], [2, 1]], 1, NonSymmetric),
        ([[0, 1], [1, 0]], [[1e-3, 0], [0, 1]], 1, BadBlockStructure),
        ([[0, 1], [1, 0]], [[0, 0], [0, -1]], 1, NotDissipative),
        ([[0, 1], [1, 0]], [[0, 0], [0, 0]], 1, NotDissipative),
        ([[1.0]], [[1.0]], 1, PreconditionFailed),
        ([[0, 1], [1, 0]], [[0, 0], [0, 1]], 2, PreconditionFailed),
        ([[0, 1], [1, 0]], [[0, 0, 0], [0, 1, 0], [0, 0, 1]], 1, PreconditionFailed),
    ],
)
def test_validate_system_rejects(A, B, N2, exc):
    with pytest.raises(exc):
        validate_system(A, B, N2)


def test_validation_errors_are_value_errors():
    with pytest.raises(ValueError):
        validate_system([[0, 1], [2, 0]], [[0, 0], [0, 1]], 1)


def test_spec_matrices_are_read_only(euler):
    with pytest.raises(ValueError):
        euler.A[0, 0] = 3.0


def test_kalman_matrix_of_euler_pair(euler):
    np.testing.assert_array_equal(kalman_matrix(euler), [[0, 0, 0, 1], [0, 1, 0, 0]])
    cert = kalman_rank_holds(euler)
    assert cert.holds and cert.numerical_rank == 2
    assert len(cert.singular_values) == 2


def test_kalman_fails_for_identity_transport():
    spec = validate_system(np.eye(2), np.diag([0.0, 1.0]), 1)
    cert = kalman_rank_holds(spec)
    assert not cert.holds and cert.numerical_rank == 1
    with pytest.raises(KalmanFails, match="Kalman rank 1 < 2") as info:
        require_kalman(spec)
    assert info.value.exit_code == 3


def test_kalman_rank_with_loose_tolerance():
    A = np.array([[0.0, 1e-9], [1e-9, 0.0]])
    spec = validate_system(A, np.diag([0.0, 1.0]), 1)
    assert kalman_rank_holds(spec).holds
    assert not kalman_rank_holds(spec, tol=1e-6).holds


def test_cayley_hamilton_reproduces_top_power(rng):
    for N in (2, 3, 4, 6):
        spec = random_system(rng, N, 1)
        c = cayley_hamilton_coeffs(spec)
        powers = [np.linalg.matrix_power(spec.A, j) for j in range(N + 1)]
        rebuilt = sum(cj * P for cj, P in zip(c, powers[:N]))
        np.testing.assert_allclose(rebuilt, powers[N], atol=1e-9 * max(1.0, np.abs(powers[N]).max()))


def test_norm_equivalence_constant_is_sharp(rng):
    spec = random_system(rng, 3, 1)
    C2 = norm_equivalence_constant(spec)
    for _ in range(200):
        y = rng.standard_normal(3)
        assert y @ y <= C2 * kalman_norm(spec, y) ** 2 * (1 + 1e-10)
    # the extremal direction attains the bound
    G = sum((spec.B @ np.linalg.matrix_power(spec.A, k)).T @ (spec.B @ np.linalg.matrix_power(spec.A, k))
            for k in range(3))
    w, V = np.linalg.eigh(G)
    y = V[:, 0]
    assert y @ y == pytest.approx(C2 * kalman_norm(spec, y) ** 2, rel=1e-9)


def test_norm_equivalence_needs_kalman():
    spec = validate_system(np.eye(2), np.diag([0.0, 1.0]), 1)
    with pytest.raises(KalmanFails):
        norm_equivalence_constant(spec)


def test_random_systems_are_valid(rng):
    for N in range(2, 6):
        spec = random_system(rng, N, int(rng.integers(1, N)))
        assert spec.lam >= 0.5 - 1e-12
        np.testing.assert_array_equal(spec.A, spec.A.T)


def test_unknown_builtin():
    with pytest.raises(PreconditionFailed):
        builtin_system("maxwell")
