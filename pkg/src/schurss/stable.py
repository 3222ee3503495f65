"""Nearest Schur-stable projection of 2x2 blocks and of quasi-triangular
Schur factors.

The 2x2 problem is solved exactly by enumerating a finite candidate set
that is known to contain the minimizer and keeping the closest stable
member.  A full state matrix is stabilized by projecting every diagonal
block of its real Schur factor while keeping the orthogonal factor fixed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .linalg import (
    as_matrix,
    eig_2x2,
    equalizing_angle,
    quartic_real_roots,
    require_square,
    rotation,
    svd_2x2,
)
from .schur import SchurForm, check_pattern, iter_blocks, schur_decompose

# Slack in the stability filter, relative to max(1, ||x||_F^2).
STABLE_TOL = 1e-12
# Largest computed eigenvalue modulus tolerated in a returned block.
EIG_TOL = 1e-9

__all__ = [
    "CandidateSet", "StableProjection", "eig_2x2", "equalizing_rotation",
    "critical_points", "candidate_set", "project_block", "project_scalar",
    "project_quasi_triangular", "project_state_matrix", "is_stable_2x2",
]


@dataclass
class CandidateSet:
    candidates: list = field(default_factory=list)
    tags: list = field(default_factory=list)

    def add(self, x, tag):
        self.candidates.append(np.asarray(x, dtype=float))
        self.tags.append(tag)

    def __len__(self):
        return len(self.candidates)

    def __iter__(self):
        return iter(zip(self.candidates, self.tags))


@dataclass(frozen=True)
class StableProjection:
    projected: np.ndarray
    distance_sq: float
    changed: bool
    tag: str = "original"


def _check_2x2(a):
    a = as_matrix(a)
    if a.shape != (2, 2):
        raise DimensionError(f"expected a 2x2 matrix, got shape {a.shape}")
    return a


def is_stable_2x2(x, tol=STABLE_TOL):
    """Whether both eigenvalues of ``x`` lie in the closed unit disk.

    Decided from the characteristic polynomial ``z^2 - tr z + det``, whose
    roots are in the closed disk iff ``|det| <= 1`` and ``|tr| <= 1 + det``.
    Unlike computed eigenvalues, ``tr`` and ``det`` are accurate to rounding
    even when ``x`` has a double eigenvalue on the unit circle.
    """
    x = np.asarray(x, dtype=float)
    tr = x[0, 0] + x[1, 1]
    det = x[0, 0] * x[1, 1] - x[0, 1] * x[1, 0]
    slack = tol * max(1.0, float(np.sum(x * x)))
    return abs(det) <= 1.0 + slack and abs(tr) <= 1.0 + det + slack


def equalizing_rotation(a):
    """Rotation ``g`` (angle in [0, pi/2)) with ``(g.T @ a @ g)[0,0] == [1,1]``."""
    a = _check_2x2(a)
    alpha = equalizing_angle(a)
    return alpha, rotation(alpha)


def critical_points(sigma1, sigma2):
    """Critical points of ``(t1 - s1)^2 + (t2 - s2)^2`` on the hyperbola ``t1 t2 = 1``.

    Substituting ``t2 = 1/t1`` and differentiating leaves the quartic
    ``t^4 - s1 t^3 + s2 t - 1``; each real root ``t`` gives ``(t, 1/t)``.
    The quartic is negative at 0 and positive at +-inf, so at least one real
    root always exists.
    """
    roots = quartic_real_roots(-float(sigma1), float(sigma2), -1.0)
    return [(t, 1.0 / t) for t in roots if t != 0.0]


def candidate_set(a):
    """Finite set of 2x2 matrices containing the Schur-stable matrix nearest to ``a``.

    Enumeration order (also the tie-breaking order): ``a`` itself, the
    rank-one corrections ``A+`` / ``A-`` (eigenvalue pinned at +1 / -1),
    the determinant-one critical points in the SVD frame of ``a``, the four
    double-eigenvalue (+-1) matrices in the equal-diagonal frame, and the
    eigenvalue (+1, -1) critical points in that same frame.
    """
    a = _check_2x2(a)
    out = CandidateSet()
    out.add(a.copy(), "original")
    eye = np.eye(2)

    for sign, tag in ((1.0, "Aplus"), (-1.0, "Aminus")):
        shifted = svd_2x2(a - sign * eye)
        if shifted.sigma1 == 0.0:
            out.add(sign * eye, tag)
            continue
        rank1 = shifted.sigma1 * np.outer(shifted.u[:, 0], shifted.v[:, 0])
        out.add(sign * eye + rank1, tag)

    # det = 1 boundary, in the SVD frame.  When det(u) det(v) = -1 the frame
    # maps det = 1 onto det = -1, which is absorbed by flipping the sign of
    # the second singular coordinate.
    sv = svd_2x2(a)
    orient = 1.0 if np.linalg.det(sv.u) * np.linalg.det(sv.v) > 0 else -1.0
    for t1, t2 in critical_points(sv.sigma1, orient * sv.sigma2):
        out.add(sv.u @ np.diag([t1, orient * t2]) @ sv.v.T, "A0")

    _, g = equalizing_rotation(a)
    ac = g.T @ a @ g
    for sign in (1.0, -1.0):
        out.add(g @ np.array([[sign, ac[0, 1]], [0.0, sign]]) @ g.T, "Apm_upper")
        out.add(g @ np.array([[sign, 0.0], [ac[1, 0], sign]]) @ g.T, "Apm_lower")

    for t1, t2 in critical_points(ac[0, 1], ac[1, 0]):
        out.add(g @ np.array([[0.0, t1], [t2, 0.0]]) @ g.T, "Astar")
    return out


def project_block(a):
    """Nearest Schur-stable 2x2 matrix to ``a`` (closed unit disk spectrum)."""
    a = _check_2x2(a)
    if is_stable_2x2(a):
        # ``a`` heads the enumeration at distance 0, so nothing can beat it
        return StableProjection(projected=a.copy(), distance_sq=0.0, changed=False)
    best, best_tag, d_min = None, None, math.inf
    for x, tag in candidate_set(a):
        d2 = float(np.sum((a - x) ** 2))
        if d2 >= d_min:
            continue
        if not is_stable_2x2(x):
            continue
        best, best_tag, d_min = x, tag, d2
    if best_tag == "original":
        return StableProjection(projected=a.copy(), distance_sq=0.0, changed=False)
    best = _pull_inside(best)
    d_min = float(np.sum((a - best) ** 2))
    return StableProjection(projected=best, distance_sq=d_min, changed=True, tag=best_tag)


def _pull_inside(x, max_steps=16):
    """Shrink ``x`` until its computed eigenvalues satisfy ``|lambda| <= 1 + EIG_TOL``.

    Minimizers with a defective double eigenvalue on the unit circle are
    only representable up to rounding, which moves the eigenvalues by about
    ``sqrt(eps)``; scaling by ``1 - 2 (rho - 1)`` retreats by that amount.
    """
    for _ in range(max_steps):
        rho = max(abs(lam) for lam in eig_2x2(x))
        if rho <= 1.0 + EIG_TOL:
            break
        x = x * (1.0 - 2.0 * (rho - 1.0))
    return x


def project_scalar(t):
    return t / max(1.0, abs(t))


def project_quasi_triangular(t, b):
    """Replace each diagonal block of ``t`` by its nearest stable peer.

    Off-block-diagonal entries are left untouched.
    """
    t = require_square(t)
    b = np.asarray(b, dtype=int)
    check_pattern(t, b)
    out = t.copy()
    for start, size in iter_blocks(b):
        if size == 1:
            out[start, start] = project_scalar(t[start, start])
        else:
            sl = slice(start, start + 2)
            out[sl, sl] = project_block(t[sl, sl]).projected
    return out


def project_state_matrix(a, form=None):
    """Stabilize ``a`` through its real Schur factor.

    Returns ``(a_hat, form)`` where ``a_hat = z @ T_hat @ z.T`` and ``form`` is
    the Schur decomposition of ``a`` that was used.  A stable ``a`` is
    returned unchanged.
    """
    a = require_square(a)
    if form is None:
        form = schur_decompose(a)
    t_hat = project_quasi_triangular(form.t, form.b)
    if np.array_equal(t_hat, form.t):
        return a.copy(), form
    return form.z @ t_hat @ form.z.T, form


def projected_schur_form(form):
    """SchurForm of the projection (same ``z`` and ``b``, projected ``t``)."""
    return SchurForm(z=form.z, t=project_quasi_triangular(form.t, form.b), b=form.b)
