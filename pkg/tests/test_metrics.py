import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_force_assignment
from schurss.errors import DimensionError, DomainError
from schurss.metrics import assignment_min, msvr, msvr_of_spectrum, nmse, nsfe, nssr, report


# -- nsfe -------------------------------------------------------------------------------

def test_nsfe_examples():
    a = np.array([[1.0, 0.0], [0.0, 1.0]])
    assert nsfe(a, a) == 0.0
    assert nsfe(a, np.zeros((2, 2))) == 1.0
    assert nsfe(2 * a, a) == pytest.approx(0.25)


def test_nsfe_errors():
    with pytest.raises(DomainError):
        nsfe(np.zeros((2, 2)), np.eye(2))
    with pytest.raises(DimensionError):
        nsfe(np.eye(2), np.eye(3))


@given(st.integers(1, 6), st.integers(0, 2 ** 32 - 1))
def test_nsfe_transpose_invariance(n, seed):
    rng = np.random.default_rng(seed)
    a, x = rng.standard_normal((2, n, n))
    assert nsfe(a.T, x.T) == pytest.approx(nsfe(a, x), rel=1e-14)


# -- assignment -----------------------------------------------------------------------------

def test_assignment_examples():
    perm, total = assignment_min([[0.0, 1.0], [1.0, 0.0]])
    assert list(perm) == [0, 1] and total == 0.0
    perm, total = assignment_min([[4.0, 1.0], [2.0, 3.0]])
    assert list(perm) == [1, 0] and total == 3.0
    perm, total = assignment_min(np.zeros((0, 0)))
    assert len(perm) == 0 and total == 0.0


def test_assignment_6x6_against_enumeration():
    c = np.random.default_rng(66).uniform(0, 10, (6, 6))
    _, total = assignment_min(c)
    assert total == pytest.approx(brute_force_assignment(c), abs=1e-12)


def test_assignment_returns_permutation():
    c = np.random.default_rng(5).standard_normal((9, 9))
    perm, total = assignment_min(c)
    assert sorted(perm) == list(range(9))
    assert total == pytest.approx(sum(c[i, perm[i]] for i in range(9)))


def test_assignment_errors():
    with pytest.raises(DimensionError):
        assignment_min(np.ones((2, 3)))
    with pytest.raises(DomainError):
        assignment_min([[np.nan, 0.0], [0.0, 0.0]])


# -- nssr / msvr / nmse -----------------------------------------------------------------------

def test_nssr_examples():
    assert nssr(2 * np.eye(2), np.eye(2)) == pytest.approx(0.25)
    a = np.diag([1.0, 2.0, 3.0])
    assert nssr(a, np.diag([3.0, 1.0, 2.0])) == 0.0
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    # i, -i against 1, -1: every pairing costs 2 per eigenvalue
    assert nssr(rot, np.diag([1.0, -1.0])) == pytest.approx(2.0)


def test_nssr_errors():
    with pytest.raises(DomainError):
        nssr(np.zeros((2, 2)), np.eye(2))
    with pytest.raises(DimensionError):
        nssr(np.eye(2), np.eye(3))


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2 ** 32 - 1))
def test_nssr_similarity_invariance(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    s = rng.standard_normal((n, n)) + 3 * np.eye(n)
    b = np.linalg.solve(s, a @ s)
    assert nssr(a, b) <= 1e-10


def test_msvr_examples():
    assert msvr(np.eye(3)) == 0.0
    assert msvr(np.diag([2.0, 0.5])) == pytest.approx(0.5)
    assert msvr_of_spectrum([1.5j, -1.5j, 0.0]) == pytest.approx(0.25 * 2 / 3)
    assert msvr_of_spectrum([]) == 0.0


def test_nmse_examples():
    y = np.array([[1.0], [2.0], [3.0], [4.0]])
    assert nmse(y, y) == 0.0
    # mean 2.5, variance sum 5; error sum 4 * 0.25 = 1
    assert nmse(y, y + 0.5) == pytest.approx(0.2)
    assert nmse(y[:, 0], np.full(4, 2.5)) == pytest.approx(1.0)


def test_nmse_noisy_copy_hand_computed():
    y = np.array([[0.0, 1.0], [1.0, -1.0], [2.0, 0.0]])
    noise = np.array([[0.1, 0.0], [-0.2, 0.1], [0.0, 0.3]])
    # column means 1 and 0; centered energy 2 + 2 = 4; noise energy 0.15
    assert nmse(y, y + noise) == pytest.approx(0.15 / 4.0)


def test_nmse_errors():
    with pytest.raises(DomainError):
        nmse(np.ones((5, 2)), np.zeros((5, 2)))
    with pytest.raises(DimensionError):
        nmse(np.ones((5, 2)), np.ones((4, 2)))


def test_report_roundtrip():
    r = report(2 * np.eye(2), np.eye(2))
    assert r.to_dict() == pytest.approx({"nsfe": 0.25, "nssr": 0.25, "msvr": 0.0})
    assert '"nsfe"' in r.to_json()
