"""Nearest orthogonal matrix (orthogonal Procrustes with identity target).

Three interchangeable methods:

* ``svd``: ``U @ V.T`` from a Jacobi SVD of ``z``.
* ``eig_sqrt``: ``z @ (z.T z)^(-1/2)`` with the inverse square root taken
  from a symmetric eigendecomposition.
* ``iterative``: the same polar factor with ``(z.T z)^(-1/2)`` approximated
  by a fixed number of steps of a quadratically convergent recursion.

None of them forces ``det(z_hat) = +1``; the minimization is over O(n).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularityError
from .linalg import jacobi_svd, require_square, sym_eig

__all__ = [
    "OrthoProjection", "nearest_orthogonal", "nearest_orthogonal_svd",
    "nearest_orthogonal_eig", "nearest_orthogonal_iter", "ortho_error",
]

# Relative singular-value floor below which z counts as rank deficient.
RANK_TOL = 1e-12


@dataclass(frozen=True)
class OrthoProjection:
    z_hat: np.ndarray
    method: str
    ortho_error: float  # ||z_hat.T z_hat - I||_F^2 / n
    distance: float     # ||z - z_hat||_F^2 / ||z||_F^2


def ortho_error(q):
    n = q.shape[0]
    return float(np.sum((q.T @ q - np.eye(n)) ** 2) / n)


def _result(z, z_hat, method):
    denom = float(np.sum(z * z))
    dist = float(np.sum((z - z_hat) ** 2)) / denom if denom > 0 else 0.0
    return OrthoProjection(z_hat=z_hat, method=method, ortho_error=ortho_error(z_hat),
                           distance=dist)


def nearest_orthogonal_svd(z):
    """Polar factor ``U @ V.T`` of ``z``.

    Raises
    ------
    SingularityError
        If the smallest singular value is below ``RANK_TOL * sigma_max``.
    """
    z = require_square(z, "z")
    u, sigma, v = jacobi_svd(z)
    if sigma[0] == 0.0 or sigma[-1] <= RANK_TOL * sigma[0]:
        raise SingularityError(
            f"z is rank deficient: smallest singular value {sigma[-1]:.3e} "
            f"(largest {sigma[0]:.3e})")
    return _result(z, u @ v.T, "svd")


def nearest_orthogonal_eig(z):
    """Polar factor via ``z @ Q diag(lambda^-1/2) Q.T`` with ``z.T z = Q diag(lambda) Q.T``."""
    z = require_square(z, "z")
    x = z.T @ z
    q, lam = sym_eig((x + x.T) / 2.0)
    if lam[-1] <= 0.0 or lam[-1] <= (RANK_TOL ** 2) * lam[0]:
        raise SingularityError(
            f"z.T @ z is not positive definite: smallest eigenvalue {lam[-1]:.3e}")
    inv_sqrt = (q / np.sqrt(lam)) @ q.T
    return _result(z, z @ inv_sqrt, "eig_sqrt")


def _solve_right(a, b):
    """``a @ inv(b)`` via a linear solve."""
    try:
        return np.linalg.solve(b.T, a.T).T
    except np.linalg.LinAlgError as exc:
        raise SingularityError(f"matrix inversion failed: {exc}") from exc


def nearest_orthogonal_iter(z, iters=None):
    """Polar factor with an iterative inverse square root of ``X = z.T z``.

    With ``E_0 = (I - X)(I + X)^-1`` and ``Xi_0 = I``::

        Xi_{r+1} = Xi_r (I + E_r)
        E_{r+1}  = E_r^2 (2I - E_r^2)^-1

    ``Xi_r`` tends to ``X^(-1/2)``; in the eigenbasis of ``X`` each
    ``e_r`` squares (up to a factor near 1/2) per step, so convergence is
    quadratic once ``|e_r| < 1``.

    Parameters
    ----------
    z : array_like, shape (n, n)
    iters : int, optional
        Number of recursion steps, defaults to ``n``.
    """
    z = require_square(z, "z")
    n = z.shape[0]
    iters = n if iters is None else int(iters)
    eye = np.eye(n)
    x = z.T @ z
    e = _solve_right(eye - x, eye + x)
    xi = eye.copy()
    for _ in range(iters):
        xi = xi @ (eye + e)
        e2 = e @ e
        e = _solve_right(e2, 2.0 * eye - e2)
    z_hat = z @ xi
    if not np.all(np.isfinite(z_hat)):
        raise SingularityError("iterative inverse square root produced non-finite values")
    return _result(z, z_hat, "iterative")


_METHODS = {
    "svd": nearest_orthogonal_svd,
    "eig": nearest_orthogonal_eig,
    "eig_sqrt": nearest_orthogonal_eig,
    "iter": nearest_orthogonal_iter,
    "iterative": nearest_orthogonal_iter,
}


def nearest_orthogonal(z, method="svd", **kwargs):
    try:
        fn = _METHODS[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}; choose from {sorted(_METHODS)}") from None
    return fn(z, **kwargs)
