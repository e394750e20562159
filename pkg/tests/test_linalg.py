import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose

from msense import (
    InputError,
    as_symmetric,
    frobenius_norm,
    orthonormalize,
    spectral_norm,
    sym_eig,
)

sym_matrices = st.integers(2, 8).flatmap(
    lambda d: arrays(
        np.float64,
        (d, d),
        elements=st.floats(min_value=-10, max_value=10, allow_nan=False),
    )
).map(lambda m: 0.5 * (m + m.T))


def test_spectral_norm_examples():
    assert spectral_norm(np.diag([3.0, -5.0])) == pytest.approx(5.0, rel=1e-10)
    assert spectral_norm(np.eye(7)) == pytest.approx(1.0, rel=1e-10)
    u = np.array([1.0, 1.0])  # |u|^2 = 2
    assert spectral_norm(np.outer(u, u)) == pytest.approx(2.0, rel=1e-10)


def test_frobenius_norm_examples():
    assert frobenius_norm(np.diag([3.0, 4.0])) == pytest.approx(5.0)
    assert frobenius_norm(np.zeros((3, 3))) == 0.0
    assert frobenius_norm(np.eye(4)) == pytest.approx(2.0)


def test_nonfinite_rejected():
    bad = np.array([[1.0, np.nan], [np.nan, 1.0]])
    with pytest.raises(InputError):
        spectral_norm(bad)
    with pytest.raises(InputError):
        frobenius_norm(np.array([[np.inf]]))
    with pytest.raises(InputError):
        sym_eig(bad)


def test_as_symmetric_absorbs_rounding_and_rejects_real_asymmetry():
    m = np.array([[1.0, 2.0], [2.0 + 5e-13, 3.0]])
    out = as_symmetric(m)
    assert_allclose(out, out.T)
    with pytest.raises(InputError):
        as_symmetric(np.array([[1.0, 2.0], [2.1, 3.0]]))


def test_sym_eig_diag_example():
    pairs = sym_eig(np.diag([1.0, 0.9, 0.8]))
    assert_allclose(pairs.values, [1.0, 0.9, 0.8])
    # vectors are signed permutation-aligned identity columns
    assert_allclose(np.abs(pairs.vectors), np.eye(3), atol=1e-14)


def test_sym_eig_zero_matrix():
    pairs = sym_eig(np.zeros((4, 4)))
    assert_allclose(pairs.values, np.zeros(4))


def test_sym_eig_reconstruction(rng):
    m = rng.standard_normal((6, 6))
    m = 0.5 * (m + m.T)
    pairs = sym_eig(m)
    resid = frobenius_norm(pairs.reconstruct() - m) / max(1.0, frobenius_norm(m))
    assert resid < 1e-8
    assert np.all(np.diff(np.abs(pairs.values)) <= 1e-12)
    gram = pairs.vectors.T @ pairs.vectors
    assert frobenius_norm(gram - np.eye(6)) < 1e-10


def test_orthonormalize_examples(rng):
    # already orthonormal input: same span, orthonormal columns
    q0 = orthonormalize(rng.standard_normal((5, 3)))
    q1 = orthonormalize(q0)
    assert_allclose(q1.T @ q1, np.eye(3), atol=1e-12)
    assert spectral_norm(q1 @ q1.T - q0 @ q0.T) < 1e-10

    v = rng.standard_normal((6, 1))
    assert_allclose(orthonormalize(v), v / np.linalg.norm(v))

    g = rng.standard_normal((20, 3))
    q = orthonormalize(g)
    assert_allclose(q.T @ q, np.eye(3), atol=1e-12)


def test_orthonormalize_rejects_rank_deficient():
    m = np.ones((4, 2))
    with pytest.raises(InputError):
        orthonormalize(m)
    with pytest.raises(InputError):
        orthonormalize(np.zeros((3, 5)))  # cols > rows


@settings(max_examples=50, deadline=None)
@given(sym_matrices)
def test_norm_chain(m):
    spec = spectral_norm(m)
    fro = frobenius_norm(m)
    d = m.shape[0]
    assert spec <= fro + 1e-9 * max(1.0, fro)
    assert fro <= np.sqrt(d) * spec + 1e-9 * max(1.0, fro)


@settings(max_examples=50, deadline=None)
@given(sym_matrices)
def test_eig_round_trip_and_norm_agreement(m):
    pairs = sym_eig(m)
    resid = frobenius_norm(pairs.reconstruct() - m) / max(1.0, frobenius_norm(m))
    assert resid < 1e-8
    top = np.max(np.abs(pairs.values)) if pairs.values.size else 0.0
    assert abs(spectral_norm(m) - top) < 1e-9 * max(1.0, top)
