import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from qdt.errors import NumericalError, PreconditionError
from qdt.spectral import (
    positive_projector,
    positive_projectors,
    spectral_decompose,
    trace_product,
)

from conftest import random_density, random_projector


def test_identity_eigenvalues():
    values, vectors = spectral_decompose(np.eye(3))
    np.testing.assert_allclose(values, [1, 1, 1], atol=1e-15)
    np.testing.assert_allclose(vectors.T @ vectors, np.eye(3), atol=1e-12)


def test_diagonal_keeps_standard_basis():
    values, vectors = spectral_decompose(np.diag([0.8, 0.2]))
    np.testing.assert_allclose(values, [0.8, 0.2])
    np.testing.assert_allclose(np.abs(vectors), np.eye(2))


def test_two_by_two_matches_quadratic_formula():
    # Characteristic polynomial x^2 - 0.2 x - 0.28: roots (0.2 +- sqrt(0.04 + 1.12)) / 2.
    values, _ = spectral_decompose([[0.3, 0.5], [0.5, -0.1]])
    np.testing.assert_allclose(values, [(0.2 + np.sqrt(1.16)) / 2, (0.2 - np.sqrt(1.16)) / 2], atol=1e-14)
    assert values[0] == pytest.approx(0.6385, abs=1e-4)
    assert values[1] == pytest.approx(-0.4385, abs=1e-4)


def test_rejects_non_symmetric():
    with pytest.raises(PreconditionError):
        spectral_decompose([[1.0, 2.0], [0.0, 1.0]])


def test_iteration_cap_reports_sweeps():
    with pytest.raises(NumericalError) as info:
        spectral_decompose([[1.0, 0.5], [0.5, 1.0]], max_sweeps=0)
    assert info.value.iterations == 0


symmetric = st.integers(1, 12).flatmap(
    lambda n: arrays(np.float64, (n, n), elements=st.floats(-1, 1, allow_nan=False))
).map(lambda a: (a + a.T) / 2)


@settings(max_examples=150, deadline=None)
@given(symmetric)
def test_reconstruction_and_orthonormality(a):
    values, vectors = spectral_decompose(a)
    n = a.shape[0]
    assert np.all(np.diff(values) <= 0)
    np.testing.assert_allclose(vectors.T @ vectors, np.eye(n), atol=1e-10, rtol=0)
    scale = max(np.max(np.abs(a)), 1e-300)
    recon = vectors @ np.diag(values) @ vectors.T
    assert np.max(np.abs(a - recon)) < 1e-10 * max(scale, 1.0)
    np.testing.assert_allclose(values, np.linalg.eigvalsh(a)[::-1], atol=1e-10)


@settings(max_examples=100, deadline=None)
@given(symmetric)
def test_positive_projector_is_symmetric_idempotent(a):
    p = positive_projector(a)
    np.testing.assert_allclose(p, p.T, atol=1e-10, rtol=0)
    np.testing.assert_allclose(p @ p, p, atol=1e-10, rtol=0)
    # rank equals the number of eigenvalues above the cut (LAPACK oracle)
    assert round(np.trace(p)) == int(np.sum(np.linalg.eigvalsh(a) > 1e-10))


def test_positive_projector_sign_split():
    np.testing.assert_allclose(positive_projector(np.diag([0.5, -0.5])), np.diag([1.0, 0.0]), atol=1e-15)


def test_zero_eigenvalue_is_excluded():
    # eigenvalues 0 (vector (1,1)/sqrt2) and -1 (vector (1,-1)/sqrt2)
    p = positive_projector([[-0.5, 0.5], [0.5, -0.5]])
    np.testing.assert_allclose(p, np.zeros((2, 2)), atol=1e-15)


def test_negative_definite_gives_zero(rng):
    m = -random_density(6, rng)
    np.testing.assert_array_equal(positive_projector(m), np.zeros((6, 6)))


def test_batched_projectors_match_jacobi(rng):
    stack = []
    for _ in range(10):
        a = rng.uniform(-1, 1, (7, 7))
        stack.append((a + a.T) / 2)
    batched = positive_projectors(np.array(stack))
    for a, p in zip(stack, batched):
        np.testing.assert_allclose(p, positive_projector(a), atol=1e-10)


def test_trace_product_cases(rng):
    rho = random_density(4, rng)
    assert trace_product(np.eye(4), rho) == pytest.approx(1.0, abs=1e-14)
    assert trace_product(np.zeros((4, 4)), rho) == 0.0
    assert trace_product(np.diag([1.0, 0.0]), np.diag([0.3, 0.7])) == pytest.approx(0.3)
    with pytest.raises(PreconditionError):
        trace_product(np.eye(2), np.eye(3))


def test_trace_of_projector_against_density_is_a_probability(rng):
    for _ in range(200):
        dim = int(rng.integers(1, 10))
        t = trace_product(random_projector(dim, rng), random_density(dim, rng))
        assert -1e-10 <= t <= 1 + 1e-10


def test_helstrom_inequality(rng):
    # Tr(P'(rho1 - tau rho0)) can never beat the sum of positive eigenvalues.
    for _ in range(20):
        dim = int(rng.integers(2, 10))
        rho1, rho0 = random_density(dim, rng), random_density(dim, rng)
        tau = float(rng.uniform(0, 3))
        diff = rho1 - tau * rho0
        bound = np.sum(np.clip(np.linalg.eigvalsh(diff), 0, None))
        assert trace_product(positive_projector(diff), diff) == pytest.approx(bound, abs=1e-12)
        for _ in range(50):
            p = random_projector(dim, rng)
            assert trace_product(p, rho1) - tau * trace_product(p, rho0) <= bound + 1e-9


@pytest.mark.parametrize("scale", [1e-20, 1e-8, 1e6])
def test_relative_accuracy_at_any_scale(rng, scale):
    a = rng.uniform(-1, 1, (6, 6))
    a = scale * (a + a.T)
    values, vectors = spectral_decompose(a)
    assert np.max(np.abs(a - vectors @ np.diag(values) @ vectors.T)) < 1e-10 * np.max(np.abs(a))


def test_zero_matrix():
    values, vectors = spectral_decompose(np.zeros((3, 3)))
    np.testing.assert_array_equal(values, np.zeros(3))
    np.testing.assert_array_equal(vectors, np.eye(3))
