"""Dense double-precision linear algebra kernels.

Everything here works on plain ``numpy.ndarray`` objects of dtype float64.
The factorizations are written out explicitly (Householder QR, one-sided
Jacobi SVD, cyclic Jacobi eigendecomposition, power iteration) rather than
delegated to LAPACK, so that every downstream result can be traced back to
code in this package.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConvergenceError, DimensionError, PreconditionError

EPS = np.finfo(float).eps


# ---------------------------------------------------------------------------
# Matrix carrier and file format
# ---------------------------------------------------------------------------

def as_matrix(a, name="matrix"):
    """Return ``a`` as a finite 2-D float64 array (copying only when needed)."""
    m = np.asarray(a, dtype=float)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    elif m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise PreconditionError(f"{name} contains non-finite entries")
    return m


def require_square(a, name="matrix"):
    m = as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    return m


def matrix_to_dict(a):
    a = as_matrix(a)
    return {"rows": int(a.shape[0]), "cols": int(a.shape[1]),
            "data": [float(x) for x in a.ravel(order="C")]}


def matrix_from_dict(obj):
    """Parse the ``{"rows", "cols", "data"}`` JSON object into an array."""
    try:
        rows, cols, data = obj["rows"], obj["cols"], obj["data"]
    except (KeyError, TypeError) as exc:
        raise DimensionError(f"matrix object must have rows/cols/data fields: {exc}") from None
    if not (isinstance(rows, int) and isinstance(cols, int)) or rows < 1 or cols < 1:
        raise DimensionError("rows and cols must be positive integers")
    if not isinstance(data, list) or len(data) != rows * cols:
        raise DimensionError(f"data must hold rows*cols = {rows * cols} numbers")
    return as_matrix(np.array(data, dtype=float).reshape(rows, cols))


def load_matrix(path):
    with open(path) as fh:
        return matrix_from_dict(json.load(fh))


def save_matrix(a, path):
    Path(path).write_text(json.dumps(matrix_to_dict(a)) + "\n")


# ---------------------------------------------------------------------------
# Householder machinery and QR
# ---------------------------------------------------------------------------

def householder_reflector(x):
    """Unit vector ``u`` such that ``(I - 2 u u^T) x`` is a multiple of e1.

    Returns ``(u, active)``.  When ``x`` is already a multiple of the first
    basis vector (including the zero vector) no reflection is needed and
    ``(zeros, False)`` is returned.

    The sign of ``x[0]`` is folded into the shift, so ``u`` is formed
    without cancellation.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 2:
        return np.zeros_like(x), False
    if not np.any(x[1:]):
        return np.zeros_like(x), False
    # scale first so that squaring can neither overflow nor underflow
    u = x / np.max(np.abs(x))
    x0 = float(u[0])
    alpha = math.sqrt(float(u @ u))
    u[0] = x0 + math.copysign(alpha, x0)
    u /= math.sqrt(float(u @ u))
    return u, True


def qr_factor(a, bandwidth=None):
    """Householder QR factorization ``a = q @ r`` of a square matrix.

    Parameters
    ----------
    a : array_like, shape (n, n)
    bandwidth : int, optional
        Number of nonzero subdiagonals of ``a``.  When given, reflectors are
        truncated to ``bandwidth + 1`` entries, which turns the cost of
        factoring a banded matrix from O(n^3) into O(n^2 * bandwidth).

    Returns
    -------
    q : ndarray, orthogonal
    r : ndarray, upper triangular with exact zeros below the diagonal
        (for banded input, provided ``a`` really has no entries below the
        declared band)
    """
    r = require_square(a).copy()
    n = r.shape[0]
    q = np.eye(n)
    for k in range(n - 1):
        stop = n if bandwidth is None else min(n, k + bandwidth + 1)
        u, active = householder_reflector(r[k:stop, k])
        if not active:
            continue
        u2 = 2.0 * u
        rk = r[k:stop, k:]
        rk -= u2[:, None] * (u @ rk)
        qk = q[:, k:stop]
        qk -= (qk @ u)[:, None] * u2
        r[k + 1:stop, k] = 0.0
    return q, r


# ---------------------------------------------------------------------------
# Singular values
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Svd2x2:
    u: np.ndarray
    sigma1: float
    sigma2: float
    v: np.ndarray

    def matrix(self):
        return self.u @ np.diag([self.sigma1, self.sigma2]) @ self.v.T


def _rot(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def _fix_signs(u, v):
    # Deterministic frame: first nonzero entry of each column of u is positive.
    for j in range(u.shape[1]):
        col = u[:, j]
        lead = col[np.flatnonzero(np.abs(col) > 0)[0]] if np.any(col != 0) else 1.0
        if lead < 0:
            u[:, j] = -u[:, j]
            v[:, j] = -v[:, j]
    return u, v


def svd_2x2(a):
    """Closed-form SVD of a real 2x2 matrix.

    Writes ``a = R(phi) diag(s1, s2) R(theta)`` with plane rotations and a
    signed second singular value, then moves the sign of ``s2`` into ``u``.
    """
    a = as_matrix(a)
    if a.shape != (2, 2):
        raise DimensionError(f"svd_2x2 expects a 2x2 matrix, got {a.shape}")
    (p, b), (c, d) = a
    e, f = (p + d) / 2.0, (p - d) / 2.0
    g, h = (c + b) / 2.0, (c - b) / 2.0
    qq, rr = math.hypot(e, h), math.hypot(f, g)
    s1, s2 = qq + rr, qq - rr
    a1, a2 = math.atan2(g, f), math.atan2(h, e)
    theta, phi = (a2 - a1) / 2.0, (a2 + a1) / 2.0
    u = _rot(phi)
    v = _rot(theta).T
    if s2 < 0:
        u[:, 1] = -u[:, 1]
        s2 = -s2
    u, v = _fix_signs(u, v)
    return Svd2x2(u=u, sigma1=s1, sigma2=s2, v=v)


def _complete_basis(u, filled):
    """Replace columns of ``u`` not in ``filled`` with an orthonormal completion."""
    n = u.shape[0]
    basis = [u[:, j] for j in filled]
    out = u.copy()
    candidates = iter(np.eye(n))
    for j in range(u.shape[1]):
        if j in filled:
            continue
        for e in candidates:
            w = e.copy()
            for _ in range(2):  # re-orthogonalize once for accuracy
                for b in basis:
                    w -= (b @ w) * b
            nw = np.linalg.norm(w)
            if nw > 1e-8:
                w /= nw
                basis.append(w)
                out[:, j] = w
                break
    return out


def jacobi_svd(a, tol=None, max_sweeps=60):
    """One-sided (Hestenes) Jacobi SVD of a square matrix.

    Returns ``(u, sigma, v)`` with ``a = u @ diag(sigma) @ v.T`` and
    ``sigma`` sorted in nonincreasing order.

    Raises
    ------
    ConvergenceError
        If column pairs are still non-orthogonal after ``max_sweeps`` sweeps;
        the error carries the largest remaining relative inner product.
    """
    a = require_square(a)
    n = a.shape[0]
    tol = 4 * EPS if tol is None else tol
    # work on a unit-scaled copy so inner products neither under- nor overflow
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    scale = scale if scale > 0.0 and math.isfinite(scale) else 1.0
    w = a / scale
    v = np.eye(n)
    worst = 0.0
    for _ in range(max_sweeps):
        worst = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                wi, wj = w[:, i], w[:, j]
                alpha, beta, gamma = wi @ wi, wj @ wj, wi @ wj
                if gamma == 0.0 or alpha == 0.0 or beta == 0.0:
                    continue
                rel = abs(gamma) / (math.sqrt(alpha) * math.sqrt(beta))
                if rel <= tol:
                    continue
                worst = max(worst, rel)
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                cs = 1.0 / math.sqrt(1.0 + t * t)
                sn = cs * t
                wi_new = cs * wi - sn * wj
                w[:, j] = sn * wi + cs * wj
                w[:, i] = wi_new
                vi = v[:, i].copy()
                v[:, i] = cs * vi - sn * v[:, j]
                v[:, j] = sn * vi + cs * v[:, j]
        if worst == 0.0:
            break
    else:
        raise ConvergenceError("jacobi_svd did not converge", partial=(w * scale, v),
                               residual=worst)
    sigma = np.linalg.norm(w, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma, w, v = sigma[order], w[:, order], v[:, order]
    floor = n * EPS * (sigma[0] if sigma[0] > 0 else 1.0)
    filled = [j for j in range(n) if sigma[j] > floor]
    u = np.zeros((n, n))
    for j in filled:
        u[:, j] = w[:, j] / sigma[j]
    if len(filled) < n:
        u = _complete_basis(u, filled)
    return u, sigma * scale, v


def sym_eig(a, tol=None, max_sweeps=60):
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Returns ``(q, lam)`` with ``a = q @ diag(lam) @ q.T`` and ``lam`` sorted
    in descending order.  Sweeps continue until an off-diagonal entry is
    only dropped when it is below the floating-point resolution of both
    diagonal entries it couples; ``tol`` (relative to ``||a||_F``) is an
    optional earlier exit.
    """
    a = require_square(a)
    scale = np.linalg.norm(a)
    if np.linalg.norm(a - a.T) > 1e-10 * scale:
        raise PreconditionError("sym_eig requires a symmetric matrix")
    n = a.shape[0]
    m = (a + a.T) / 2.0
    q = np.eye(n)
    tol = 0.0 if tol is None else tol
    for _ in range(max_sweeps):
        off = float(np.linalg.norm(m - np.diag(np.diag(m))))
        if off <= tol * scale or off == 0.0:
            break
        rotated = False
        for p in range(n - 1):
            for r in range(p + 1, n):
                apr = m[p, r]
                if apr == 0.0:
                    continue
                g = 100.0 * abs(apr)
                if abs(m[p, p]) + g == abs(m[p, p]) and abs(m[r, r]) + g == abs(m[r, r]):
                    # below the resolution of both diagonal entries
                    m[p, r] = m[r, p] = 0.0
                    continue
                diff = m[r, r] - m[p, p]
                if abs(diff) + g == abs(diff):
                    t = apr / diff
                else:
                    tau = diff / (2.0 * apr)
                    t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                mp, mr = m[:, p].copy(), m[:, r].copy()
                m[:, p], m[:, r] = c * mp - s * mr, s * mp + c * mr
                mp, mr = m[p, :].copy(), m[r, :].copy()
                m[p, :], m[r, :] = c * mp - s * mr, s * mp + c * mr
                m[p, r] = m[r, p] = 0.0
                qp, qr_ = q[:, p].copy(), q[:, r].copy()
                q[:, p], q[:, r] = c * qp - s * qr_, s * qp + c * qr_
                rotated = True
        if not rotated:
            break
    else:
        raise ConvergenceError("sym_eig did not converge", partial=(q, np.diag(m)))
    lam = np.diag(m).copy()
    order = np.argsort(-lam, kind="stable")
    return q[:, order], lam[order]


@dataclass(frozen=True)
class SpectralNormResult:
    value: float
    left_vec: np.ndarray
    right_vec: np.ndarray
    converged: bool = True
    iterations: int = 0


def spectral_norm(a, tol=1e-12, max_iter=500):
    """Largest singular value and its singular vectors.

    Power iteration on ``A^T A`` stops when successive right vectors differ
    by at most ``tol`` or the singular-pair residual ``||A^T u - sigma v||``
    drops below ``tol * sigma``.  Near-equal leading singular values make
    both tests slow to trigger; after ``max_iter`` steps the triplet is taken
    from :func:`jacobi_svd` instead (``converged=False`` flags that route).
    """
    a = as_matrix(a)
    m, n = a.shape
    if not np.any(a):
        return SpectralNormResult(0.0, np.eye(m)[0], np.eye(n)[0], True, 0)
    # Start from the heaviest row: never orthogonal to the top right vector
    # unless that row is itself null.
    v = a[np.argmax(np.sum(a * a, axis=1))].copy()
    v /= np.linalg.norm(v)
    for it in range(1, max_iter + 1):
        u = a @ v
        sigma = np.linalg.norm(u)
        u /= sigma
        w = a.T @ u
        resid = np.linalg.norm(w - sigma * v)
        v_new = w / np.linalg.norm(w)
        step = np.linalg.norm(v_new - v)
        v = v_new
        if step <= tol or resid <= tol * sigma:
            u = a @ v
            sigma = np.linalg.norm(u)
            return SpectralNormResult(float(sigma), u / sigma, v, True, it)
    # zero padding to a square matrix keeps the leading triplet
    k = max(m, n)
    padded = np.zeros((k, k))
    padded[:m, :n] = a
    uu, sv, vv = jacobi_svd(padded)
    return SpectralNormResult(float(sv[0]), uu[:m, 0].copy(), vv[:n, 0].copy(), False, max_iter)


# ---------------------------------------------------------------------------
# Quartic roots
# ---------------------------------------------------------------------------

def _quartic(t, c3, c1, c0):
    return (((t + c3) * t) * t + c1) * t + c0


def _quartic_d(t, c3, c1):
    return (4.0 * t + 3.0 * c3) * t * t + c1


def _cluster(values, tol):
    """Single-linkage clusters of complex numbers closer than ``tol``."""
    groups = [[v] for v in values]
    merged = True
    while merged:
        merged = False
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                if min(abs(x - y) for x in groups[i] for y in groups[j]) <= tol(groups[i][0]):
                    groups[i].extend(groups.pop(j))
                    merged = True
                    break
            if merged:
                break
    return groups


def quartic_real_roots(c3, c1, c0):
    """Real roots of ``t^4 + c3 t^3 + c1 t + c0``.

    Roots are eigenvalues of the (already Hessenberg) companion matrix,
    computed with this package's Francis QR.  Nearby eigenvalues are grouped
    (a multiple root scatters into a small cluster) and represented by the
    cluster mean, which is then refined by Newton's method.  Returns a sorted
    list with duplicates closer than 1e-9 merged.
    """
    from .schur import francis_qr, spectrum_of  # local: schur imports this module

    comp = np.array([[-c3, 0.0, -c1, -c0],
                     [1.0, 0.0, 0.0, 0.0],
                     [0.0, 1.0, 0.0, 0.0],
                     [0.0, 0.0, 1.0, 0.0]])
    eigs = spectrum_of(francis_qr(comp)).eigenvalues
    groups = _cluster(list(eigs), lambda z: 1e-4 * (1.0 + abs(z)))

    roots = []
    for g in groups:
        centre = complex(np.mean(g))
        if abs(centre.imag) > 1e-9 * (1.0 + abs(centre)):
            continue
        t = centre.real
        best_t, best_p = t, abs(_quartic(t, c3, c1, c0))
        for _ in range(60):
            d = _quartic_d(t, c3, c1)
            if d == 0.0:
                break
            t = t - _quartic(t, c3, c1, c0) / d
            p = abs(_quartic(t, c3, c1, c0))
            if p < best_p:
                best_t, best_p = t, p
            if p == 0.0:
                break
        if best_p <= 1e-8 * (1.0 + best_t ** 4):
            roots.append(best_t)
    roots.sort()
    out = []
    for r in roots:
        if not out or abs(r - out[-1]) > 1e-9:
            out.append(r)
    return out


# ---------------------------------------------------------------------------
# 2x2 helpers shared by the Schur and projection code
# ---------------------------------------------------------------------------

def eig_2x2(a):
    """Eigenvalues ``(lambda_plus, lambda_minus)`` of a 2x2 matrix.

    Uses the trace/determinant quadratic formula; a negative discriminant
    yields an exact conjugate pair.
    """
    a = as_matrix(a)
    if a.shape != (2, 2):
        raise DimensionError(f"eig_2x2 expects a 2x2 matrix, got {a.shape}")
    tr = a[0, 0] + a[1, 1]
    # (a11 - a22)^2 + 4 a12 a21 == tr^2 - 4 det, without the cancellation
    disc = (a[0, 0] - a[1, 1]) ** 2 + 4.0 * a[0, 1] * a[1, 0]
    if disc >= 0:
        r = math.sqrt(disc)
        return complex((tr + r) / 2.0), complex((tr - r) / 2.0)
    r = math.sqrt(-disc) / 2.0
    return complex(tr / 2.0, r), complex(tr / 2.0, -r)


def equalizing_angle(a):
    """Angle ``alpha`` in [0, pi/2) with equal diagonal in ``G^T a G``.

    ``G`` is the rotation ``[[cos, -sin], [sin, cos]]``.  The diagonal gap of
    the rotated matrix is ``cos(2a) (a11 - a22) + sin(2a) (a12 + a21)``.
    """
    delta = a[0, 0] - a[1, 1]
    total = a[0, 1] + a[1, 0]
    if delta == 0.0:
        return 0.0
    two_alpha = math.atan2(delta, -total) % math.pi
    alpha = two_alpha / 2.0
    return 0.0 if alpha >= math.pi / 2 else alpha


def rotation(alpha):
    return _rot(alpha)
