"""Error metrics for matrix projections and identified models.

nsfe
    Squared Frobenius error normalized by the reference's squared norm.
nssr
    Squared spectral distance under the best one-to-one eigenvalue
    pairing, normalized by the reference spectrum's energy.
msvr
    Mean squared excess of eigenvalue magnitudes over 1.
nmse
    Output error normalized by the per-channel variance of the target.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DimensionError, DomainError
from .linalg import as_matrix, require_square
from .schur import eigenvalues

__all__ = [
    "MetricReport", "nsfe", "nssr", "assignment_min", "msvr", "msvr_of_spectrum",
    "nmse", "report",
]


@dataclass(frozen=True)
class MetricReport:
    nsfe: float | None = None
    nssr: float | None = None
    msvr: float | None = None

    def to_dict(self):
        return {k: v for k, v in asdict(self).items() if v is not None}

    def to_json(self):
        return json.dumps(self.to_dict())


def nsfe(a, x):
    a, x = as_matrix(a, "a"), as_matrix(x, "x")
    if a.shape != x.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {x.shape}")
    denom = float(np.sum(a * a))
    if denom == 0.0:
        raise DomainError("nsfe is undefined for a zero reference matrix")
    return float(np.sum((a - x) ** 2)) / denom


def assignment_min(cost):
    """Minimum-cost perfect matching on a square cost matrix.

    Shortest augmenting path variant of the Hungarian method with row and
    column potentials, O(n^3).

    Returns
    -------
    perm : ndarray of int
        ``perm[i]`` is the column assigned to row ``i``.
    total : float
        ``sum(cost[i, perm[i]])``.
    """
    c = np.asarray(cost, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise DimensionError(f"cost matrix must be square, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise DomainError("cost matrix has non-finite entries")
    n = c.shape[0]
    if n == 0:
        return np.zeros(0, dtype=int), 0.0
    inf = np.inf
    # 1-based internals; index 0 is the virtual source column
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    match_col = np.zeros(n + 1, dtype=int)  # match_col[j] = row matched to column j
    way = np.zeros(n + 1, dtype=int)
    for i in range(1, n + 1):
        match_col[0] = i
        j0 = 0
        minv = np.full(n + 1, inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = match_col[j0]
            delta, j1 = inf, 0
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = c[i0 - 1, j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta, j1 = minv[j], j
            for j in range(n + 1):
                if used[j]:
                    u[match_col[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match_col[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match_col[j0] = match_col[j1]
            j0 = j1
    perm = np.zeros(n, dtype=int)
    for j in range(1, n + 1):
        perm[match_col[j] - 1] = j - 1
    total = float(sum(c[i, perm[i]] for i in range(n)))
    return perm, total


def nssr(a, x, spec_a=None, spec_x=None):
    """Assignment-matched squared spectral distance relative to ``a``'s spectrum.

    Spectra may be supplied when already known (e.g. read off a Schur form);
    otherwise they are computed with :func:`schurss.schur.eigenvalues`.
    """
    if spec_a is None:
        spec_a = eigenvalues(require_square(a, "a"))
    if spec_x is None:
        spec_x = eigenvalues(require_square(x, "x"))
    la = np.asarray(spec_a, dtype=complex)
    lx = np.asarray(spec_x, dtype=complex)
    if la.shape != lx.shape:
        raise DimensionError(f"spectrum sizes differ: {la.shape} vs {lx.shape}")
    denom = float(np.sum(np.abs(la) ** 2))
    if denom == 0.0:
        raise DomainError("nssr is undefined when the reference spectrum is all zero")
    cost = np.abs(lx[:, None] - la[None, :]) ** 2
    _, total = assignment_min(cost)
    return total / denom


def msvr_of_spectrum(lam):
    lam = np.asarray(lam, dtype=complex)
    if lam.size == 0:
        return 0.0
    return float(np.mean(np.maximum(np.abs(lam) - 1.0, 0.0) ** 2))


def msvr(a):
    return msvr_of_spectrum(eigenvalues(require_square(a)))


def nmse(y, y_hat):
    """``sum ||y - y_hat||^2 / sum ||y - mean(y)||^2`` over time steps and channels."""
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape:
        raise DimensionError(f"shape mismatch {y.shape} vs {y_hat.shape}")
    if y.ndim == 1:
        y, y_hat = y[:, None], y_hat[:, None]
    y2 = y.reshape(-1, y.shape[-1])
    centered = y2 - y2.mean(axis=0)
    denom = float(np.sum(centered ** 2))
    if denom == 0.0:
        raise DomainError("nmse is undefined for a constant target signal")
    return float(np.sum((y - y_hat) ** 2)) / denom


def report(a, x):
    """NSFE, NSSR and MSVR of an approximation ``x`` of ``a``."""
    return MetricReport(nsfe=nsfe(a, x), nssr=nssr(a, x), msvr=msvr(x))
