"""Independent brute-force references used by the test-suite.

Nothing here calls the code under test.
"""

import itertools
import math

import numpy as np


def brute_force_assignment(cost):
    """Minimum over all permutations (feasible for n <= 8)."""
    cost = np.asarray(cost, dtype=float)
    n = cost.shape[0]
    best = math.inf
    for perm in itertools.permutations(range(n)):
        total = sum(cost[i, perm[i]] for i in range(n))
        best = min(best, total)
    return best


def _scan(fn, lo, hi, ra, da, n_grid=801, rounds=4):
    """Row-wise dense scan plus local zooming of ``(r(u) - ra)^2 + (d(u) - da)^2``."""
    t = np.linspace(0.0, 1.0, n_grid)
    u = lo[:, None] + (hi - lo)[:, None] * t[None, :]
    best = np.full(lo.shape, np.inf)
    for _ in range(rounds):
        r, d = fn(u)
        f = (r - ra) ** 2 + (d - da) ** 2
        j = np.argmin(f, axis=1)
        rows = np.arange(len(lo))
        best = np.minimum(best, f[rows, j])
        step = u[:, 1] - u[:, 0]
        centre = u[rows, j]
        new_lo = np.maximum(lo, centre - 2 * step)
        new_hi = np.minimum(hi, centre + 2 * step)
        t = np.linspace(0.0, 1.0, 201)
        u = new_lo[:, None] + (new_hi - new_lo)[:, None] * t[None, :]
    return best


def _hyperbola_min(ra, da, k):
    """min (r - ra)^2 + (d - da)^2 over r^2 - d^2 = k, r >= 0, for each entry of ``k``.

    The branches are parametrized hyperbolically: for ``k > 0``
    ``(r, d) = sqrt(k) (cosh u, sinh u)``; for ``k < 0``
    ``(r, d) = sqrt(-k) (sinh u, +-cosh u)`` with ``u >= 0``.  ``k = 0`` (the
    cone ``r = |d|``) is approached through a tiny positive ``k``.
    """
    k = np.where(k == 0.0, 1e-14, np.asarray(k, dtype=float))
    reach = abs(da) + abs(ra) + 10.0
    s = np.sqrt(np.abs(k))
    u_max = np.arcsinh(reach / s) + 1.0
    out = np.full(k.shape, np.inf)
    pos = k > 0
    if np.any(pos):
        sp = s[pos][:, None]
        out[pos] = _scan(lambda u: (sp * np.cosh(u), sp * np.sinh(u)),
                         -u_max[pos], u_max[pos], ra, da)
    neg = ~pos
    if np.any(neg):
        sn = s[neg][:, None]
        for g in (1.0, -1.0):
            val = _scan(lambda u, g=g: (sn * np.sinh(u), g * sn * np.cosh(u)),
                        np.zeros(int(neg.sum())), u_max[neg], ra, da)
            out[neg] = np.minimum(out[neg], val)
    return out


def nearest_stable_2x2_distance(a, step=0.005):
    """Squared distance from ``a`` to the closed set of Schur-stable 2x2 matrices.

    A real 2x2 matrix is Schur stable iff ``|det| <= 1`` and
    ``|tr| <= 1 + det``.  If ``a`` is unstable the minimizer lies on the
    boundary of that (trace, det) triangle, which is scanned at resolution
    ``step``; for each boundary point the distance to the set of matrices
    with that trace and determinant is minimized exactly in the coordinates
    ``X = tau/2 I + [[y, p], [q, -y]]``, where ``det X = tau^2/4 - y^2 - p q``.
    """
    a = np.asarray(a, dtype=float)
    ta = a[0, 0] + a[1, 1]
    da_det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    if abs(da_det) <= 1.0 and abs(ta) <= 1.0 + da_det:
        return 0.0
    ya = (a[0, 0] - a[1, 1]) / 2.0
    wa = math.sqrt(2.0) * ya
    sa = (a[0, 1] + a[1, 0]) / math.sqrt(2.0)
    dd = (a[0, 1] - a[1, 0]) / math.sqrt(2.0)
    ra = math.hypot(wa, sa)

    pts = []
    for delta in np.arange(-1.0, 1.0 + step / 2, step):
        pts.append((1.0 + delta, delta))
        pts.append((-(1.0 + delta), delta))
    for tau in np.arange(-2.0, 2.0 + step / 2, step):
        pts.append((tau, 1.0))
    pts = np.array(pts)
    tau, det = pts[:, 0], pts[:, 1]
    k = 2.0 * (tau * tau / 4.0 - det)
    inner = _hyperbola_min(ra, dd, k)
    total = (tau - ta) ** 2 / 2.0 + inner
    return float(np.min(total))
