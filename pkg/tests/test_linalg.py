import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from schurss.errors import ConvergenceError, DimensionError, PreconditionError
from schurss.linalg import (
    eig_2x2,
    householder_reflector,
    jacobi_svd,
    load_matrix,
    matrix_from_dict,
    matrix_to_dict,
    qr_factor,
    quartic_real_roots,
    save_matrix,
    spectral_norm,
    svd_2x2,
    sym_eig,
)

SIZES = (2, 5, 10, 20)


def orth_err(q):
    return np.linalg.norm(q.T @ q - np.eye(q.shape[0]))


def quartic(t, c3, c1, c0):
    return t ** 4 + c3 * t ** 3 + c1 * t + c0


finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


# -- matrix JSON -------------------------------------------------------------

def test_matrix_dict_round_trip(tmp_path):
    a = np.arange(6.0).reshape(2, 3) / 7.0
    obj = matrix_to_dict(a)
    assert obj["rows"] == 2 and obj["cols"] == 3 and len(obj["data"]) == 6
    assert np.array_equal(matrix_from_dict(obj), a)
    save_matrix(a, tmp_path / "m.json")
    assert np.array_equal(load_matrix(tmp_path / "m.json"), a)


@pytest.mark.parametrize("obj", [
    {"rows": 2, "cols": 2, "data": [1.0, 2.0, 3.0]},
    {"rows": 2, "data": [1.0, 2.0]},
    {"rows": 0, "cols": 1, "data": []},
    [1, 2, 3],
])
def test_matrix_dict_rejects_malformed(obj):
    with pytest.raises(DimensionError):
        matrix_from_dict(obj)


def test_matrix_rejects_non_finite():
    with pytest.raises(PreconditionError):
        matrix_from_dict({"rows": 1, "cols": 2, "data": [1.0, float("nan")]})


# -- Householder and QR ----------------------------------------------------------

def test_reflector_pythagorean():
    u, flag = householder_reflector([3.0, 4.0])
    assert flag
    y = np.array([3.0, 4.0]) - 2 * u * (u @ [3.0, 4.0])
    assert abs(abs(y[0]) - 5.0) < 1e-14 and abs(y[1]) < 1e-14
    assert abs(np.linalg.norm(u) - 1) < 1e-15


def test_reflector_e1_needs_no_reflection():
    u, flag = householder_reflector([2.0, 0.0, 0.0])
    assert not flag and not np.any(u)


def test_reflector_zero_vector():
    u, flag = householder_reflector(np.zeros(4))
    assert not flag and not np.any(u)


def test_reflector_random_six_vector():
    x = np.random.default_rng(6).standard_normal(6)
    u, _ = householder_reflector(x)
    y = x - 2 * u * (u @ x)
    assert np.max(np.abs(y[1:])) < 1e-12


@pytest.mark.parametrize("x", [[1e-200, 1e-200], [1e200, 1e200, 1.0], [0.0, 2.0]])
def test_reflector_extreme_scales(x):
    x = np.array(x)
    u, flag = householder_reflector(x)
    assert flag and np.all(np.isfinite(u))
    y = x - 2 * u * (u @ x)
    assert np.max(np.abs(y[1:])) <= 1e-14 * np.max(np.abs(x))


@given(arrays(float, st.integers(2, 8), elements=finite))
def test_reflector_property(x):
    u, flag = householder_reflector(x)
    if flag:
        assert abs(np.linalg.norm(u) - 1) < 1e-12
        y = x - 2 * u * (u @ x)
        assert np.max(np.abs(y[1:])) <= 1e-12 * max(1.0, np.linalg.norm(x))


def test_qr_identity_and_diagonal():
    q, r = qr_factor(np.eye(3))
    assert np.array_equal(q, np.eye(3)) and np.array_equal(r, np.eye(3))
    q, r = qr_factor(np.diag([2.0, 3.0]))
    assert np.allclose(np.abs(q), np.eye(2))
    assert np.allclose(np.abs(np.diag(r)), [2.0, 3.0])


def test_qr_seeded_5x5():
    a = np.random.default_rng(5).standard_normal((5, 5))
    q, r = qr_factor(a)
    assert np.linalg.norm(q @ r - a) < 1e-10
    assert orth_err(q) < 1e-10
    assert np.all(np.tril(r, -1) == 0.0)


def test_qr_non_square():
    with pytest.raises(DimensionError):
        qr_factor(np.ones((2, 3)))


@pytest.mark.parametrize("n", SIZES)
def test_qr_reconstruction_sweep(n):
    for seed in range(100):
        a = np.random.default_rng([n, seed]).standard_normal((n, n))
        q, r = qr_factor(a)
        assert np.linalg.norm(a - q @ r) / max(1, np.linalg.norm(a)) <= 1e-10
        assert orth_err(q) <= 1e-9 * n
        assert np.all(np.tril(r, -1) == 0.0)


# -- 2x2 SVD ---------------------------------------------------------------------

def test_svd_2x2_examples():
    s = svd_2x2(np.diag([3.0, 1.0]))
    assert (s.sigma1, s.sigma2) == pytest.approx((3.0, 1.0))
    assert np.allclose(np.abs(s.u), np.eye(2)) and np.allclose(np.abs(s.v), np.eye(2))
    s = svd_2x2(np.zeros((2, 2)))
    assert (s.sigma1, s.sigma2) == (0.0, 0.0)
    s = svd_2x2([[0.0, 2.0], [0.0, 0.0]])
    assert (s.sigma1, s.sigma2) == pytest.approx((2.0, 0.0), abs=1e-15)


@given(arrays(float, (2, 2), elements=finite))
def test_svd_2x2_property(a):
    s = svd_2x2(a)
    assert s.sigma1 >= s.sigma2 >= 0
    assert np.linalg.norm(s.matrix() - a) <= 1e-12 * max(1.0, np.linalg.norm(a))
    assert orth_err(s.u) < 1e-12 and orth_err(s.v) < 1e-12


# -- Jacobi SVD and symmetric eigensolver -------------------------------------------------

def test_jacobi_svd_examples():
    _, sig, _ = jacobi_svd(np.eye(4))
    assert np.allclose(sig, 1.0)
    u, sig, v = jacobi_svd(np.diag([2.0, 0.5]))
    assert np.allclose(sig, [2.0, 0.5])
    assert np.allclose(np.abs(u), np.eye(2)) and np.allclose(np.abs(v), np.eye(2))


def test_jacobi_svd_seeded_10x10():
    a = np.random.default_rng(10).standard_normal((10, 10))
    u, sig, v = jacobi_svd(a)
    assert np.linalg.norm(u @ np.diag(sig) @ v.T - a) < 1e-9
    assert np.all(np.diff(sig) <= 0) and np.all(sig >= 0)


@pytest.mark.parametrize("n", SIZES)
def test_jacobi_svd_sweep(n):
    for seed in range(100):
        a = np.random.default_rng([n, seed, 1]).standard_normal((n, n))
        u, sig, v = jacobi_svd(a)
        assert np.linalg.norm(a - u @ np.diag(sig) @ v.T) / max(1, np.linalg.norm(a)) <= 1e-9
        assert orth_err(u) <= 1e-9 * n and orth_err(v) <= 1e-9 * n


def test_jacobi_svd_rank_deficient():
    a = np.outer([1.0, 2.0, 3.0], [1.0, -1.0, 0.5])
    u, sig, v = jacobi_svd(a)
    assert np.linalg.norm(u @ np.diag(sig) @ v.T - a) < 1e-12
    assert orth_err(u) < 1e-12
    assert sig[1] < 1e-15 and sig[2] < 1e-15


def test_jacobi_svd_reports_non_convergence():
    a = np.random.default_rng(0).standard_normal((6, 6))
    with pytest.raises(ConvergenceError):
        jacobi_svd(a, max_sweeps=1)


def test_sym_eig_examples():
    q, lam = sym_eig(np.diag([1.0, 4.0]))
    assert np.allclose(lam, [4.0, 1.0])
    q, lam = sym_eig([[0.0, 1.0], [1.0, 0.0]])
    assert np.allclose(lam, [1.0, -1.0])
    assert np.allclose(np.abs(q[:, 0]), [1 / math.sqrt(2)] * 2)
    assert abs(q[0, 1] + q[1, 1]) < 1e-15


def test_sym_eig_seeded_8x8():
    g = np.random.default_rng(8).standard_normal((8, 8))
    a = g + g.T
    q, lam = sym_eig(a)
    assert np.linalg.norm(q @ np.diag(lam) @ q.T - a) < 1e-9
    assert np.all(np.diff(lam) <= 0)


def test_sym_eig_rejects_asymmetric():
    with pytest.raises(PreconditionError):
        sym_eig([[1.0, 2.0], [0.0, 1.0]])


@pytest.mark.parametrize("n", SIZES)
def test_sym_eig_sweep(n):
    for seed in range(100):
        g = np.random.default_rng([n, seed, 2]).standard_normal((n, n))
        a = g + g.T
        q, lam = sym_eig(a)
        assert np.linalg.norm(a - q @ np.diag(lam) @ q.T) / max(1, np.linalg.norm(a)) <= 1e-9
        assert orth_err(q) <= 1e-9 * n


# -- spectral norm -------------------------------------------------------------------

def test_spectral_norm_examples():
    assert spectral_norm(np.eye(5)).value == pytest.approx(1.0)
    assert spectral_norm(np.diag([3.0, 1.0])).value == pytest.approx(3.0)
    r = spectral_norm(np.zeros((3, 3)))
    assert r.value == 0.0
    assert np.linalg.norm(r.left_vec) == 1.0 and np.linalg.norm(r.right_vec) == 1.0


def test_spectral_norm_seeded_7x7():
    a = np.random.default_rng(7).standard_normal((7, 7))
    r = spectral_norm(a)
    assert abs(r.value - jacobi_svd(a)[1][0]) < 1e-8


def test_spectral_norm_clustered_top_values():
    rng = np.random.default_rng(3)
    q1, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    q2, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    a = q1 @ np.diag([1.0, 1.0 - 1e-9, 0.5, 0.2]) @ q2.T
    r = spectral_norm(a)
    assert abs(r.value - 1.0) < 1e-12
    assert np.linalg.norm(a @ r.right_vec - r.value * r.left_vec) < 1e-12


@pytest.mark.parametrize("n", SIZES)
def test_spectral_norm_sweep(n):
    for seed in range(100):
        a = np.random.default_rng([n, seed, 3]).standard_normal((n, n))
        r = spectral_norm(a)
        s_max = jacobi_svd(a)[1][0]
        assert abs(r.value - s_max) <= 1e-8 * s_max
        assert abs(np.linalg.norm(a @ r.right_vec) - r.value) <= 1e-8 * r.value
        assert abs(np.linalg.norm(r.left_vec) - 1) <= 1e-10
        assert abs(np.linalg.norm(r.right_vec) - 1) <= 1e-10


# -- quartic ------------------------------------------------------------------------

@pytest.mark.parametrize("coeffs, expected", [
    ((0.0, 0.0, -1.0), [-1.0, 1.0]),
    ((-2.0, 2.0, -1.0), [-1.0, 1.0]),
    ((0.0, 0.0, 1.0), []),
])
def test_quartic_examples(coeffs, expected):
    roots = quartic_real_roots(*coeffs)
    assert len(roots) == len(expected)
    assert np.allclose(roots, expected, atol=1e-6)
    for t in roots:
        assert abs(quartic(t, *coeffs)) <= 1e-8 * (1 + t ** 4)


@settings(max_examples=300)
@given(finite, finite, finite)
def test_quartic_roots_property(c3, c1, c0):
    roots = quartic_real_roots(c3, c1, c0)
    assert len(roots) <= 4
    assert all(b - a > 1e-9 for a, b in zip(roots, roots[1:]))
    for t in roots:
        assert abs(quartic(t, c3, c1, c0)) <= 1e-8 * (1 + t ** 4)


@settings(max_examples=200)
@given(st.floats(-5, 5), st.floats(-5, 5))
def test_quartic_target_always_has_a_root(s1, s2):
    # t^4 - s1 t^3 + s2 t - 1 is -1 at 0 and positive far out
    assert quartic_real_roots(-s1, s2, -1.0)


def test_quartic_finds_simple_roots_of_factored_polynomial():
    # pick the fourth root so that the t^2 coefficient (e2) vanishes
    roots = np.array([1.0, 2.0, -0.5])
    d =-(roots[0] * roots[1] + roots[0] * roots[2] + roots[1] * roots[2]) / roots.sum()
    allr = np.append(roots, d)
    poly = np.poly(allr)  # [1, c3, 0, c1, c0]
    assert abs(poly[2]) < 1e-12
    found = quartic_real_roots(poly[1], poly[3], poly[4])
    assert np.allclose(found, np.sort(allr), atol=1e-9)


def test_eig_2x2_examples():
    assert eig_2x2([[2.0, 0.0], [0.0, 3.0]]) == (3, 2)
    assert eig_2x2([[0.0, 1.0], [-1.0, 0.0]]) == (1j, -1j)
    assert eig_2x2([[1.0, 4.0], [1.0, 1.0]]) == (3, -1)
