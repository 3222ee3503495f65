"""Real Schur decomposition: Householder Hessenberg reduction followed by the
explicit Francis double-shift QR iteration.

The active window ``T[:p, :p]`` shrinks from the bottom as 1x1 and 2x2
blocks deflate.  Deflation uses the Ahues-Tisseur product test on the
trailing 2x2 windows.  Deflated 2x2 blocks with real eigenvalues are split
by one extra rotation so that the block-pattern vector only declares 2x2
blocks for genuine complex-conjugate pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, PreconditionError, StructureError
from .linalg import (
    EPS,
    eig_2x2,
    householder_reflector,
    qr_factor,
    require_square,
    rotation,
)

SMALL = np.finfo(float).tiny / EPS


@dataclass(frozen=True)
class SchurForm:
    """``source = z @ t @ z.T`` with ``t`` quasi-upper-triangular.

    ``b`` tags each row of ``t``: 1 starts a 1x1 block, 2 starts a 2x2 block
    and 0 marks the second row of a 2x2 block.
    """

    z: np.ndarray
    t: np.ndarray
    b: np.ndarray

    def reconstruct(self):
        return self.z @ self.t @ self.z.T

    def blocks(self):
        """Yield ``(start, size)`` for every diagonal block."""
        return iter_blocks(self.b)


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray  # complex, conjugate pairs adjacent

    def __len__(self):
        return len(self.eigenvalues)


def iter_blocks(b):
    b = list(b)
    i, n = 0, len(b)
    out = []
    while i < n:
        if b[i] == 1:
            out.append((i, 1))
            i += 1
        elif b[i] == 2 and i + 1 < n and b[i + 1] == 0:
            out.append((i, 2))
            i += 2
        else:
            raise StructureError(f"invalid block pattern {b} at index {i}")
    return out


def check_pattern(t, b):
    """Raise StructureError unless ``t`` is quasi-triangular as declared by ``b``."""
    n = t.shape[0]
    if len(b) != n:
        raise StructureError(f"block pattern has length {len(b)}, matrix has order {n}")
    mask = np.tril(np.ones((n, n), dtype=bool), -1)
    for start, size in iter_blocks(b):
        if size == 2:
            mask[start + 1, start] = False
    if np.any(t[mask] != 0.0):
        raise StructureError("matrix has nonzero entries below its declared block diagonal")


# ---------------------------------------------------------------------------
# Hessenberg reduction
# ---------------------------------------------------------------------------

def hessenberg_reduce(a):
    """Orthogonal reduction ``a = u @ h @ u.T`` with ``h`` upper Hessenberg."""
    h = require_square(a).copy()
    n = h.shape[0]
    reflectors = []
    for k in range(n - 2):
        u, active = householder_reflector(h[k + 1:, k])
        reflectors.append(u if active else None)
        if not active:
            continue
        h[k + 1:, k:] -= 2.0 * np.outer(u, u @ h[k + 1:, k:])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ u, u)
        h[k + 2:, k] = 0.0
    acc = np.eye(n)
    for k in range(n - 3, -1, -1):
        u = reflectors[k]
        if u is None:
            continue
        acc[k + 1:, k + 1:] -= 2.0 * np.outer(u, u @ acc[k + 1:, k + 1:])
    return np.triu(h, -1), acc


# ---------------------------------------------------------------------------
# Francis double-shift QR
# ---------------------------------------------------------------------------

def _negligible(t, k, eps, floor=0.0):
    """Whether subdiagonal ``t[k, k-1]`` may be set to zero.

    A cheap size check against the neighbouring diagonal guards the
    Ahues-Tisseur test ``|h21| |h12| <= eps |h22| |h22 - h11|``, which on
    its own would accept a large ``h21`` whenever ``h12`` vanishes.
    Entries at or below ``floor`` (an absolute, normwise threshold) are
    always negligible.
    """
    h21 = abs(t[k, k - 1])
    if h21 <= max(SMALL, floor):
        return True
    h11, h12, h22 = t[k - 1, k - 1], t[k - 1, k], t[k, k]
    tst = abs(h11) + abs(h22)
    if tst == 0.0:
        if k >= 2:
            tst += abs(t[k - 1, k - 2])
        if k + 1 < t.shape[0]:
            tst += abs(t[k + 1, k])
    if h21 > eps * tst:
        return False
    ab, ba = max(h21, abs(h12)), min(h21, abs(h12))
    aa, bb = max(abs(h22), abs(h11 - h22)), min(abs(h22), abs(h11 - h22))
    s = aa + ab
    return ba * (ab / s) <= max(SMALL, eps * (bb * (aa / s)))


def _rotate_pair(t, z, k, g):
    """Apply the plane rotation ``g`` to rows/columns ``k, k+1``."""
    t[k:k + 2, :] = g.T @ t[k:k + 2, :]
    t[:, k:k + 2] = t[:, k:k + 2] @ g
    z[:, k:k + 2] = z[:, k:k + 2] @ g


def _settle_block(t, z, b, k, standardize):
    """Finalize the 2x2 diagonal block starting at row ``k``.

    Real-eigenvalue blocks are triangularized by a rotation whose first
    column is an eigenvector; complex blocks are kept (optionally rotated to
    equal diagonal entries).
    """
    x = t[k:k + 2, k:k + 2]
    if x[1, 0] == 0.0:
        b[k] = b[k + 1] = 1
        return
    a, bb, c, d = x[0, 0], x[0, 1], x[1, 0], x[1, 1]
    disc = (a - d) ** 2 + 4.0 * bb * c
    if disc >= 0.0:
        half = (a - d) / 2.0
        root = math.sqrt(disc) / 2.0
        # eigenvalue farther from d, computed without cancellation
        lam = d + half + math.copysign(root, half) if half != 0 else d + root
        v1 = np.array([bb, lam - a])
        v2 = np.array([lam - d, c])
        v = v1 if np.linalg.norm(v1) >= np.linalg.norm(v2) else v2
        nv = np.linalg.norm(v)
        if nv == 0.0:
            b[k] = 2
            b[k + 1] = 0
            return
        v = v / nv
        g = np.array([[v[0], -v[1]], [v[1], v[0]]])
        _rotate_pair(t, z, k, g)
        t[k + 1, k] = 0.0
        b[k] = b[k + 1] = 1
        return
    if standardize:
        from .linalg import equalizing_angle

        _rotate_pair(t, z, k, rotation(equalizing_angle(x.copy())))
    b[k] = 2
    b[k + 1] = 0


def francis_qr(h, eps=1e-12, max_sweeps=None, standardize=False):
    """Real Schur form of an upper Hessenberg matrix.

    Parameters
    ----------
    h : array_like, shape (n, n)
        Upper Hessenberg input.
    eps : float
        Relative deflation tolerance.
    max_sweeps : int, optional
        Budget of double-shift sweeps; defaults to ``30 * n``.
    standardize : bool
        Rotate each complex 2x2 block to have equal diagonal entries.

    Returns
    -------
    SchurForm
        With ``h = z @ t @ z.T``.

    Raises
    ------
    ConvergenceError
        When the sweep budget runs out; ``err.partial`` is the current
        (incomplete) form and ``err.info['active_size']`` the undeflated order.
    """
    t = require_square(h, "h").copy()
    n = t.shape[0]
    if np.any(np.tril(t, -2) != 0.0):
        raise PreconditionError("francis_qr expects an upper Hessenberg matrix")
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    max_sweeps = 30 * n if max_sweeps is None else max_sweeps
    z = np.eye(n)
    b = np.zeros(n, dtype=int)
    # Parts of t far below the working precision of ||h|| (e.g. ~1e-200
    # next to O(1) entries) underflow in the shift polynomial and stall the
    # iteration; zeroing them perturbs h by O(eps^2 ||h||).
    floor = EPS * EPS * float(np.linalg.norm(t))

    p = n
    sweeps = 0
    stagnant = 0
    while p > 2:
        if _negligible(t, p - 1, eps, floor):
            t[p - 1, p - 2] = 0.0
            b[p - 1] = 1
            p -= 1
            stagnant = 0
            continue
        if _negligible(t, p - 2, eps, floor):
            t[p - 2, p - 3] = 0.0
            _settle_block(t, z, b, p - 2, standardize)
            p -= 2
            stagnant = 0
            continue
        if sweeps >= max_sweeps:
            raise ConvergenceError(
                f"francis_qr: no convergence after {sweeps} sweeps (active size {p})",
                partial=SchurForm(z=z, t=t, b=b), active_size=p)

        w = t[:p, :p]
        stagnant += 1
        if stagnant % 10 == 0:
            # exceptional shift to break cycles
            ex = abs(t[p - 1, p - 2]) + abs(t[p - 2, p - 3])
            diag = 0.75 * ex + t[p - 1, p - 1]
            s = 2.0 * diag
            det = diag * diag + 0.4375 * ex * ex
        else:
            s = t[p - 2, p - 2] + t[p - 1, p - 1]
            det = t[p - 2, p - 2] * t[p - 1, p - 1] - t[p - 2, p - 1] * t[p - 1, p - 2]
        # w is Hessenberg, so m has exact zeros below its second subdiagonal
        m = w @ w - s * w
        m[np.diag_indices(p)] += det
        q, _ = qr_factor(m, bandwidth=2)
        t[:p, :] = q.T @ t[:p, :]
        t[:, :p] = t[:, :p] @ q
        z[:, :p] = z[:, :p] @ q
        t[:p, :p] = np.triu(t[:p, :p], -1)
        sweeps += 1

    if p == 2:
        _settle_block(t, z, b, 0, standardize)
    elif p == 1:
        b[0] = 1
    return SchurForm(z=z, t=t, b=b)


def schur_decompose(a, eps=1e-12, max_sweeps=None, standardize=False):
    """Real Schur decomposition ``a = z @ t @ z.T``."""
    a = require_square(a)
    h, u = hessenberg_reduce(a)
    form = francis_qr(h, eps=eps, max_sweeps=max_sweeps, standardize=standardize)
    return SchurForm(z=u @ form.z, t=form.t, b=form.b)


def spectrum_of(form):
    """Eigenvalues read off the diagonal blocks of a Schur form."""
    t = form.t
    out = []
    for start, size in iter_blocks(form.b):
        if size == 1:
            out.append(complex(t[start, start]))
        else:
            out.extend(eig_2x2(t[start:start + 2, start:start + 2]))
    return Spectrum(eigenvalues=np.array(out, dtype=complex))


def eigenvalues(a):
    """Spectrum of a square matrix via :func:`schur_decompose`."""
    return spectrum_of(schur_decompose(a)).eigenvalues
