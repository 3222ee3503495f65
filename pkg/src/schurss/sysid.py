"""Linear state-space identification with stability constraints.

Model::

    x[k+1] = A x[k] + B u[k]
    y[k]   = C x[k] + D u[k]

Training minimizes the mean squared output error with full-batch AdamW
steps.  Gradients come from the exact adjoint (BPTT) recursion.  Three
ways of keeping ``A`` stable are supported:

``schur_proj``
    Free ``A``; after every step ``A`` is replaced by its Schur-factor
    projection onto the stable set.
``schur_built``
    ``A = Z T Z^T`` with ``Z`` and ``T`` as free parameters; after every
    step ``Z`` is mapped to the nearest orthogonal matrix and ``T`` is
    truncated to a fixed 2x2-block quasi-triangular pattern and projected.
``regularized``
    Free ``A`` with the hinge penalty ``max(||A||_2^2 - 1 + eps, 0)^2``
    added to the loss; no hard guarantee.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DimensionError, DivergenceError, PreconditionError
from .linalg import as_matrix, matrix_from_dict, matrix_to_dict, spectral_norm
from .metrics import msvr, nmse, nssr
from .orthogonal import nearest_orthogonal_svd
from .schur import schur_decompose
from .stable import project_quasi_triangular, project_state_matrix

METHODS = ("schur_proj", "schur_built", "regularized")

__all__ = [
    "StateSpaceModel", "BuiltParams", "OptimizerState", "TrainConfig", "TrainRun",
    "simulate", "loss_and_grads", "reg_term_and_grad", "adamw_step", "init_optimizer",
    "apply_constraint_schur_proj", "apply_constraint_schur_built", "realize",
    "built_pattern", "init_model", "train", "evaluate", "METHODS",
]


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StateSpaceModel:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        a, b, c, d = (as_matrix(m, name) for m, name in
                      ((self.a, "a"), (self.b, "b"), (self.c, "c"), (self.d, "d")))
        nx = a.shape[0]
        if a.shape != (nx, nx):
            raise DimensionError(f"A must be square, got {a.shape}")
        if b.shape[0] != nx or c.shape[1] != nx:
            raise DimensionError(f"B {b.shape} / C {c.shape} inconsistent with n_x = {nx}")
        if d.shape != (c.shape[0], b.shape[1]):
            raise DimensionError(f"D must be {(c.shape[0], b.shape[1])}, got {d.shape}")
        for name, m in zip("abcd", (a, b, c, d)):
            object.__setattr__(self, name, m)

    @property
    def n_x(self):
        return self.a.shape[0]

    @property
    def n_u(self):
        return self.b.shape[1]

    @property
    def n_y(self):
        return self.c.shape[0]

    def to_dict(self):
        return {k: matrix_to_dict(getattr(self, k)) for k in "abcd"}

    @classmethod
    def from_dict(cls, obj):
        try:
            return cls(*(matrix_from_dict(obj[k]) for k in "abcd"))
        except KeyError as exc:
            raise ValueError(f"model JSON is missing field {exc}") from None

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


def _check_io(m, u, x0):
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    if u.ndim != 2 or u.shape[1] != m.n_u:
        raise DimensionError(f"input must have shape (N, {m.n_u}), got {u.shape}")
    x0 = np.zeros(m.n_x) if x0 is None else np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape != (m.n_x,):
        raise DimensionError(f"x0 must have {m.n_x} entries, got {x0.shape}")
    return u, x0


def simulate(m, u, x0=None):
    """Run the model on input ``u`` of shape ``(N, n_u)``.

    Returns ``(y_hat, x)`` with ``y_hat`` of shape ``(N, n_y)`` and the state
    trajectory ``x`` of shape ``(N + 1, n_x)`` (``x[0] = x0``).
    """
    u, x0 = _check_io(m, u, x0)
    n = u.shape[0]
    x = np.empty((n + 1, m.n_x))
    x[0] = x0
    bu = u @ m.b.T
    at = m.a.T
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n):
            x[k + 1] = x[k] @ at + bu[k]
        y = x[:-1] @ m.c.T + u @ m.d.T
    return y, x


# ---------------------------------------------------------------------------
# Loss, gradients, regularizer
# ---------------------------------------------------------------------------

def _sequences(u, y):
    """Normalize a single ``(u, y)`` pair or a list of pairs to a list."""
    if isinstance(u, (list, tuple)):
        if not isinstance(y, (list, tuple)) or len(u) != len(y):
            raise DimensionError("u and y must be sequences of equal length")
        return list(zip(u, y))
    return [(u, y)]


def loss_and_grads(m, u, y, x0=None):
    """Mean squared output error and its exact gradient w.r.t. A, B, C, D.

    ``u`` and ``y`` are arrays of shape ``(N, n_u)`` / ``(N, n_y)`` or lists
    of such arrays (independent sequences, each started from ``x0``).  The
    loss is ``(1/N) sum_k ||y[k] - y_hat[k]||^2`` with ``N`` the total number
    of time steps.

    Returns
    -------
    loss : float
    grads : dict
        Keys ``"a"``, ``"b"``, ``"c"``, ``"d"``.
    """
    pairs = _sequences(u, y)
    total = sum(np.asarray(uu).shape[0] for uu, _ in pairs)
    if total == 0:
        raise PreconditionError("empty sequence")
    grads = {k: np.zeros_like(getattr(m, k)) for k in "abcd"}
    sq = 0.0
    for uu, yy in pairs:
        uu, _ = _check_io(m, uu, x0)
        yy = np.asarray(yy, dtype=float).reshape(uu.shape[0], -1)
        if yy.shape[1] != m.n_y:
            raise DimensionError(f"output must have {m.n_y} channels, got {yy.shape[1]}")
        y_hat, x = simulate(m, uu, x0)
        with np.errstate(over="ignore", invalid="ignore"):
            r = y_hat - yy
            sq += float(np.sum(r * r))
            e = (2.0 / total) * r
            grads["c"] += e.T @ x[:-1]
            grads["d"] += e.T @ uu
            # lam[k] = dL/dx[k]; x[N] feeds no output, so lam[N] = 0
            ce = e @ m.c
            n = uu.shape[0]
            lam = np.zeros((n + 1, m.n_x))
            for k in range(n - 1, 0, -1):
                lam[k] = ce[k] + lam[k + 1] @ m.a
            grads["a"] += lam[1:].T @ x[:-1]
            grads["b"] += lam[1:].T @ uu
    loss = sq / total
    if not math.isfinite(loss):
        raise DivergenceError(f"non-finite loss ({loss})")
    return loss, grads


def sequence_loss(m, u, y, x0=None):
    pairs = _sequences(u, y)
    total, sq = 0, 0.0
    for uu, yy in pairs:
        y_hat, _ = simulate(m, uu, x0)
        with np.errstate(over="ignore", invalid="ignore"):
            sq += float(np.sum((y_hat - np.asarray(yy, dtype=float).reshape(y_hat.shape)) ** 2))
        total += y_hat.shape[0]
    return sq / total


def reg_term_and_grad(a, eps_reg=1e-3):
    """Hinge penalty on the spectral norm and its gradient.

    ``r = max(s^2 - 1 + eps_reg, 0)^2`` with ``s = ||a||_2``; where
    differentiable, ``dr/da = 2 h 2 s u v^T`` with ``h`` the hinge value and
    ``(u, v)`` the top singular pair.
    """
    a = as_matrix(a, "a")
    sn = spectral_norm(a)
    s = sn.value
    h = max(s * s - 1.0 + eps_reg, 0.0)
    if h == 0.0:
        return 0.0, np.zeros_like(a)
    return h * h, (4.0 * h * s) * np.outer(sn.left_vec, sn.right_vec)


# ---------------------------------------------------------------------------
# Optimizer
# ---------------------------------------------------------------------------

@dataclass
class OptimizerState:
    """AdamW state with decoupled weight decay.

    The defaults follow common deep-learning library settings
    (``beta1=0.9``, ``beta2=0.999``, ``eps=1e-7``, ``weight_decay=0.004``).
    """

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-7
    weight_decay: float = 0.004
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def init_optimizer(params, **kwargs):
    st = OptimizerState(**kwargs)
    st.m = {k: np.zeros_like(p) for k, p in params.items()}
    st.v = {k: np.zeros_like(p) for k, p in params.items()}
    return st


def adamw_step(state, params, grads):
    """One AdamW update; returns ``(new_state, new_params)`` without mutating inputs.

    ::

        m <- b1 m + (1 - b1) g
        v <- b2 v + (1 - b2) g^2
        p <- p - lr wd p - lr mhat / (sqrt(vhat) + eps)
    """
    step = state.step + 1
    b1, b2 = state.beta1, state.beta2
    c1, c2 = 1.0 - b1 ** step, 1.0 - b2 ** step
    new_m, new_v, new_p = {}, {}, {}
    for k, p in params.items():
        g = grads[k]
        if g.shape != p.shape:
            raise DimensionError(f"gradient for {k!r} has shape {g.shape}, expected {p.shape}")
        m = b1 * state.m.get(k, np.zeros_like(p)) + (1.0 - b1) * g
        v = b2 * state.v.get(k, np.zeros_like(p)) + (1.0 - b2) * g * g
        upd = (m / c1) / (np.sqrt(v / c2) + state.eps)
        new_p[k] = p - state.lr * state.weight_decay * p - state.lr * upd
        new_m[k], new_v[k] = m, v
    return replace(state, step=step, m=new_m, v=new_v), new_p


# ---------------------------------------------------------------------------
# Constraints
# ---------------------------------------------------------------------------

def apply_constraint_schur_proj(m):
    a_hat, _ = project_state_matrix(m.a)
    return replace(m, a=a_hat)


def built_pattern(n):
    """Block pattern of 2x2 blocks with a trailing 1x1 block when ``n`` is odd."""
    b = np.zeros(n, dtype=int)
    b[0:n - n % 2:2] = 2
    if n % 2:
        b[-1] = 1
    return b


def built_mask(n):
    """Boolean mask of the entries allowed to be nonzero under :func:`built_pattern`."""
    mask = np.triu(np.ones((n, n), dtype=bool))
    for i in range(0, n - 1, 2):
        mask[i + 1, i] = True
    return mask


@dataclass(frozen=True)
class BuiltParams:
    """Pre-factorized state matrix ``A = z_raw @ t_raw @ z_raw.T``."""

    z_raw: np.ndarray
    t_raw: np.ndarray

    @property
    def n(self):
        return self.z_raw.shape[0]


def apply_constraint_schur_built(p):
    """Orthogonalize ``z_raw``; zero ``t_raw`` below the block diagonal and project it."""
    z = nearest_orthogonal_svd(p.z_raw).z_hat
    n = p.n
    t = np.where(built_mask(n), p.t_raw, 0.0)
    t = project_quasi_triangular(t, built_pattern(n))
    return BuiltParams(z_raw=z, t_raw=t)


def realize(p):
    return p.z_raw @ p.t_raw @ p.z_raw.T


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    method: str = "schur_proj"
    epochs: int = 2000
    patience: float = math.inf
    lr: float = 1e-3
    rho_r: float = 1e-2
    eps_reg: float = 1e-3
    seed: int = 0
    min_delta: float = 1e-6
    n_x: int = 5
    loss: str = "mse"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.rho_r < 0 or self.eps_reg < 0:
            raise ValueError("rho_r and eps_reg must be nonnegative")
        if self.loss != "mse":
            raise ValueError("only the mean squared error loss is supported")

    def to_dict(self):
        out = dict(self.__dict__)
        if math.isinf(out["patience"]):
            out["patience"] = None
        return out


@dataclass
class TrainRun:
    best_model: StateSpaceModel
    history: list  # rows (epoch, train_loss, val_loss, msvr)
    epochs_run: int
    stop_reason: str
    best_epoch: int = 0
    best_val_loss: float = math.inf

    def history_csv(self):
        lines = ["epoch,train_loss,val_loss,msvr"]
        lines += [f"{e},{tl!r},{vl!r},{mv!r}" for e, tl, vl, mv in self.history]
        return "\n".join(lines) + "\n"


def _random_orthogonal(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def init_model(n_x, n_u, n_y, seed=0, radius=(0.3, 0.9)):
    """Seeded stable initial model and the matching factorized parameters.

    ``T`` is block diagonal with rotation blocks of radius uniform in
    ``radius`` (plus a real scalar when ``n_x`` is odd) and ``Z`` is a random
    orthogonal matrix; ``B``, ``C``, ``D`` are Gaussian scaled by
    ``1/sqrt(n_x)``.
    """
    rng = np.random.default_rng(seed)
    t = np.zeros((n_x, n_x))
    for i in range(0, n_x - 1, 2):
        r = rng.uniform(*radius)
        th = rng.uniform(0.0, math.pi)
        t[i:i + 2, i:i + 2] = r * np.array([[math.cos(th), -math.sin(th)],
                                            [math.sin(th), math.cos(th)]])
    if n_x % 2:
        t[-1, -1] = rng.uniform(*radius) * rng.choice([-1.0, 1.0])
    z = _random_orthogonal(rng, n_x)
    scale = 1.0 / math.sqrt(n_x)
    b = rng.standard_normal((n_x, n_u)) * scale
    c = rng.standard_normal((n_y, n_x)) * scale
    d = rng.standard_normal((n_y, n_u)) * scale
    built = BuiltParams(z_raw=z, t_raw=t)
    return StateSpaceModel(a=realize(built), b=b, c=c, d=d), built


def _to_model(method, params):
    if method == "schur_built":
        a = params["z"] @ params["t"] @ params["z"].T
    else:
        a = params["a"]
    return StateSpaceModel(a=a, b=params["b"], c=params["c"], d=params["d"])


def _objective(method, params, u, y, cfg):
    model = _to_model(method, params)
    loss, g = loss_and_grads(model, u, y)
    if method == "regularized" and cfg.rho_r > 0:
        r, dr = reg_term_and_grad(model.a, cfg.eps_reg)
        loss += cfg.rho_r * r
        g["a"] = g["a"] + cfg.rho_r * dr
    if method == "schur_built":
        ga = g.pop("a")
        z, t = params["z"], params["t"]
        g["z"] = ga @ z @ t.T + ga.T @ z @ t
        g["t"] = np.where(built_mask(t.shape[0]), z.T @ ga @ z, 0.0)
    return loss, g, model


def _constrain(method, params):
    if method == "schur_proj":
        params["a"] = project_state_matrix(params["a"])[0]
    elif method == "schur_built":
        p = apply_constraint_schur_built(BuiltParams(z_raw=params["z"], t_raw=params["t"]))
        params["z"], params["t"] = p.z_raw, p.t_raw
    return params


def _split_pairs(part):
    us = [np.asarray(uu, dtype=float) for uu, _ in part]
    ys = [np.asarray(yy, dtype=float) for _, yy in part]
    return us, ys


def train(data, cfg, init=None, checkpoint=None):
    """Full-batch AdamW training with best-validation checkpointing.

    Parameters
    ----------
    data : DatasetSplit-like
        Needs ``train`` and ``validation`` lists of ``(u, y)`` pairs.
    cfg : TrainConfig
    init : StateSpaceModel or (StateSpaceModel, BuiltParams), optional
        Initial model; by default :func:`init_model` seeded with ``cfg.seed``.
        For ``schur_built`` a ``BuiltParams`` is derived from the model's
        Schur form when not supplied.
    checkpoint : callable, optional
        Called as ``checkpoint(epoch, model)`` whenever a new best model is
        recorded.

    Each epoch evaluates the current (already constrained) parameters,
    records ``(epoch, train_loss, val_loss, msvr(A))``, updates the best
    checkpoint, checks the stopping rule and then takes one optimizer step
    followed by the constraint.

    Raises
    ------
    DivergenceError
        On a non-finite training loss.
    """
    if not data.train or not data.validation:
        raise PreconditionError("train and validation partitions must be nonempty")
    u_tr, y_tr = _split_pairs(data.train)
    u_va, y_va = _split_pairs(data.validation)
    n_u, n_y = u_tr[0].shape[1], y_tr[0].shape[1]
    built = None
    if init is None:
        model0, built = init_model(cfg.n_x, n_u, n_y, seed=cfg.seed)
    elif isinstance(init, tuple):
        model0, built = init
    else:
        model0 = init
    method = cfg.method
    if method == "schur_built":
        if built is None:
            form = schur_decompose(model0.a)
            built = BuiltParams(z_raw=form.z, t_raw=form.t)
        params = {"z": built.z_raw, "t": built.t_raw}
    else:
        params = {"a": model0.a}
    params.update(b=model0.b, c=model0.c, d=model0.d)
    params = _constrain(method, {k: v.copy() for k, v in params.items()})
    opt = init_optimizer(params, lr=cfg.lr)

    history = []
    best_model, best_val, best_epoch = None, math.inf, 0
    ref_val, wait = math.inf, 0
    stop_reason = "max_epochs"
    epoch = 0
    for epoch in range(cfg.epochs):
        model = _to_model(method, params)
        try:
            tr_loss, grads, model = _objective(method, params, u_tr, y_tr, cfg)
        except DivergenceError as exc:
            raise DivergenceError(f"{method}: non-finite training loss at epoch {epoch}",
                                  epoch=epoch, method=method, msvr=_safe_msvr(model.a)) from exc
        val = sequence_loss(model, u_va, y_va)
        mv = msvr(model.a)
        history.append((epoch, tr_loss, val, mv))
        if val < best_val:
            best_val, best_model, best_epoch = val, model, epoch
            if checkpoint is not None:
                checkpoint(epoch, model)
        if val < ref_val * (1.0 - cfg.min_delta):
            ref_val, wait = val, 0
        else:
            wait += 1
            if wait >= cfg.patience:
                stop_reason = "early_stop"
                break
        opt, params = adamw_step(opt, params, grads)
        params = _constrain(method, params)
    if best_model is None:
        best_model = _to_model(method, params)
    return TrainRun(best_model=best_model, history=history, epochs_run=len(history),
                    stop_reason=stop_reason, best_epoch=best_epoch, best_val_loss=best_val)


def _safe_msvr(a):
    try:
        return msvr(a)
    except Exception:
        return math.nan


def evaluate(model, part, true_model=None):
    """Test metrics of ``model`` on a list of ``(u, y)`` pairs (x0 = 0)."""
    ys, yh = [], []
    for uu, yy in part:
        y_hat, _ = simulate(model, uu)
        ys.append(np.asarray(yy, dtype=float))
        yh.append(y_hat)
    out = {"nmse": nmse(np.vstack(ys), np.vstack(yh)), "msvr": msvr(model.a)}
    if true_model is not None:
        out["nssr"] = nssr(true_model.a, model.a)
    return out
