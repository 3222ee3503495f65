"""Command-line interface.

Every subcommand reads and writes plain files (JSON for single objects,
CSV for tables and datasets).  Commands that write files also write a run
manifest recording the resolved configuration; ``schurss replay
<manifest>`` re-executes it.

Exit codes: 0 success, 2 usage or parse error, 3 numerical convergence
failure, 4 I/O error, 5 training divergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .benchgen import (
    PRESETS, SystemSpec, projection_case, load_dataset, make_dataset, random_stable_system,
    save_dataset,
)
from .errors import ConvergenceError, DivergenceError, SchurSSError
from .linalg import matrix_from_dict, matrix_to_dict
from .metrics import msvr, nmse, nssr, nsfe
from .orthogonal import nearest_orthogonal
from .schur import schur_decompose, spectrum_of
from .stable import project_state_matrix, projected_schur_form
from .sysid import TrainConfig, evaluate, train

EXIT_OK, EXIT_USAGE, EXIT_CONVERGENCE, EXIT_IO, EXIT_DIVERGENCE = 0, 2, 3, 4, 5
SEED_ENV = "SCHURSS_SEED"


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    subcommand: str
    config: dict
    seed: int | None
    version: str = __version__
    outputs: list = field(default_factory=list)

    def to_dict(self):
        return {"subcommand": self.subcommand, "config": self.config, "seed": self.seed,
                "version": self.version, "outputs": self.outputs}

    def write(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# file helpers
# ---------------------------------------------------------------------------

def _read_json(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from exc


def _read_matrix(path):
    """Matrix JSON, or any object carrying one under ``a_hat`` / ``z_hat`` / ``a``."""
    obj = _read_json(path)
    if isinstance(obj, dict) and "data" not in obj:
        for key in ("a_hat", "z_hat", "a"):
            if key in obj:
                obj = obj[key]
                break
    try:
        return matrix_from_dict(obj)
    except (ValueError, TypeError, KeyError) as exc:
        raise UsageError(f"{path}: not a matrix ({exc})") from exc


def _write_text(path, text):
    p = Path(path)
    try:
        if p.parent and not p.parent.exists():
            p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return str(p)


def _write_json(path, obj):
    return _write_text(path, json.dumps(obj) + "\n")


def _emit(obj):
    sys.stdout.write(json.dumps(obj) + "\n")


def _manifest(args, outputs, config):
    if not outputs and not args.manifest:
        return
    path = args.manifest or (outputs[0].rstrip("/") + ".manifest.json")
    man = RunManifest(subcommand=args.command, config=config, seed=config.get("seed"),
                      outputs=list(outputs))
    _write_text(path, json.dumps(man.to_dict(), indent=2, sort_keys=True) + "\n")


def _config(args, keys):
    return {k: getattr(args, k) for k in keys}


def _resolve_seed(args):
    if getattr(args, "seed", None) is None:
        env = os.environ.get(SEED_ENV)
        if env is None:
            args.seed = 0
        else:
            try:
                args.seed = int(env)
            except ValueError:
                raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return args.seed


def _spectrum_list(lam):
    return [[float(z.real), float(z.imag)] for z in lam]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_decompose(args):
    a = _read_matrix(args.input)
    form = schur_decompose(a, eps=args.eps)
    outputs = []
    if args.output:
        outputs.append(_write_json(args.output, {
            "z": matrix_to_dict(form.z), "t": matrix_to_dict(form.t),
            "b": [int(v) for v in form.b]}))
    err = nsfe(a, form.reconstruct()) if np.any(a) else 0.0
    _emit({"nsfe": err, "spectrum": _spectrum_list(spectrum_of(form).eigenvalues)})
    _manifest(args, outputs, _config(args, ["input", "output", "eps"]))
    return EXIT_OK


def cmd_project(args):
    a = _read_matrix(args.input)
    a_hat, form = project_state_matrix(a)
    spec_a = spectrum_of(form).eigenvalues
    spec_hat = spectrum_of(projected_schur_form(form)).eigenvalues
    res = {
        "nsfe": nsfe(a, a_hat) if np.any(a) else 0.0,
        "nssr": nssr(a, a_hat, spec_a=spec_a, spec_x=spec_hat) if np.any(spec_a) else 0.0,
        "msvr": msvr(a_hat),
    }
    outputs = []
    if args.output:
        outputs.append(_write_json(args.output, {"a_hat": matrix_to_dict(a_hat), **res}))
    _emit(res)
    _manifest(args, outputs, _config(args, ["input", "output"]))
    return EXIT_OK


BENCH_FIELDS = ["trial", "case", "n", "seed", "nsfe", "nssr", "msvr", "time_s"]


def bench_rows(case, n, seed, trials):
    rows = []
    for k in range(trials):
        a = projection_case(case, n, seed=[seed, k])
        t0 = time.perf_counter()
        a_hat, form = project_state_matrix(a)
        elapsed = time.perf_counter() - t0
        spec_a = spectrum_of(form).eigenvalues
        rows.append({
            "trial": k, "case": case, "n": n, "seed": seed,
            "nsfe": nsfe(a, a_hat),
            "nssr": nssr(a, a_hat, spec_a=spec_a),
            "msvr": msvr(a_hat),
            "time_s": elapsed,
        })
    return rows


def cmd_bench_proj(args):
    if args.case not in (1, 2, 3, 4):
        raise UsageError(f"--case must be 1..4, got {args.case}")
    if args.n < 2 or args.trials < 1:
        raise UsageError("--n must be >= 2 and --trials >= 1")
    seed = _resolve_seed(args)
    rows = bench_rows(args.case, args.n, seed, args.trials)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=BENCH_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
        text = buf.getvalue()
    else:
        text = "".join(json.dumps(r) + "\n" for r in rows)
    outputs = []
    if args.output:
        outputs.append(_write_text(args.output, text))
    else:
        sys.stdout.write(text)
    _manifest(args, outputs, _config(args, ["case", "n", "seed", "trials", "format", "output"]))
    return EXIT_OK


GEN_KEYS = ["nx", "nu", "ny", "samples", "seqs", "sigma", "gbn_p", "eig_bound", "seed", "out"]


def cmd_generate(args):
    if args.preset:
        nx, nu, ny, samples, seqs, sigma, bound = PRESETS[args.preset]
        for key, val in (("nx", nx), ("nu", nu), ("ny", ny), ("samples", samples),
                         ("seqs", seqs), ("sigma", sigma), ("eig_bound", bound)):
            if getattr(args, key) is None:
                setattr(args, key, val)
    defaults = {"nx": 5, "nu": 3, "ny": 3, "samples": 300, "seqs": 1, "sigma": 0.01,
                "eig_bound": 0.99}
    for key, val in defaults.items():
        if getattr(args, key) is None:
            setattr(args, key, val)
    seed = _resolve_seed(args)
    system_seed, data_seed = np.random.SeedSequence(seed).generate_state(2)
    spec = SystemSpec(n_x=args.nx, n_u=args.nu, n_y=args.ny, eig_bound=args.eig_bound,
                      seed=int(system_seed))
    system = random_stable_system(spec)
    split = make_dataset(system, args.samples, args.seqs, args.sigma, args.gbn_p,
                         seed=int(data_seed))
    config = _config(args, GEN_KEYS)
    out = Path(args.out)
    if out.exists() and not out.is_dir():
        raise OSError(f"cannot write dataset: {out} exists and is not a directory")
    try:
        paths = save_dataset(split, out, system=system,
                             meta={"sigma": args.sigma, "gbn_p": args.gbn_p})
    except OSError as exc:
        raise OSError(f"cannot write dataset to {out}: {exc.strerror or exc}") from exc
    man_path = args.manifest or str(out / "manifest.json")
    RunManifest(subcommand="generate", config=config, seed=seed, outputs=paths).write(man_path)
    _emit({"out": str(out), "files": paths})
    return EXIT_OK


TRAIN_KEYS = ["data", "method", "epochs", "patience", "lr", "rho_r", "eps_reg", "nx",
              "seed", "out", "history"]


def cmd_train(args):
    seed = _resolve_seed(args)
    try:
        split, system = load_dataset(args.data)
    except FileNotFoundError as exc:
        raise OSError(f"cannot read dataset {args.data}: {exc}") from exc
    method = args.method.replace("-", "_")
    patience = math.inf if args.patience is None or args.patience <= 0 else args.patience
    cfg = TrainConfig(method=method, epochs=args.epochs, patience=patience, lr=args.lr,
                      rho_r=args.rho_r, eps_reg=args.eps_reg, seed=seed, n_x=args.nx)
    try:
        run = train(split, cfg)
    except DivergenceError as exc:
        sys.stderr.write(f"error: {exc} (last good epoch {max((exc.epoch or 0) - 1, -1)}, "
                         f"msvr {exc.msvr})\n")
        return EXIT_DIVERGENCE
    outputs = []
    if args.out:
        outputs.append(_write_json(args.out, run.best_model.to_dict()))
    if args.history:
        outputs.append(_write_text(args.history, run.history_csv()))
    test = split.test or split.validation
    res = evaluate(run.best_model, test, true_model=system)
    res.update(best_epoch=run.best_epoch, epochs_run=run.epochs_run,
               stop_reason=run.stop_reason)
    _emit(res)
    _manifest(args, outputs, _config(args, TRAIN_KEYS))
    return EXIT_OK


def cmd_nearest_orthogonal(args):
    z = _read_matrix(args.input)
    kwargs = {"iters": args.iters} if args.method == "iter" else {}
    res = nearest_orthogonal(z, args.method, **kwargs)
    out = {"method": res.method, "distance": res.distance, "ortho_error": res.ortho_error}
    outputs = []
    if args.output:
        outputs.append(_write_json(args.output, {"z_hat": matrix_to_dict(res.z_hat), **out}))
    _emit(out)
    _manifest(args, outputs, _config(args, ["input", "method", "iters", "output"]))
    return EXIT_OK


def _read_signal(path):
    try:
        arr = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError:
        try:
            arr = np.loadtxt(path, delimiter=",", ndmin=2, skiprows=1)
        except ValueError as exc:
            raise UsageError(f"{path}: not a numeric CSV table ({exc})") from exc
    return arr


def cmd_metrics(args):
    res = {}
    if args.nsfe:
        res["nsfe"] = nsfe(_read_matrix(args.nsfe[0]), _read_matrix(args.nsfe[1]))
    if args.nssr:
        res["nssr"] = nssr(_read_matrix(args.nssr[0]), _read_matrix(args.nssr[1]))
    if args.msvr:
        res["msvr"] = msvr(_read_matrix(args.msvr))
    if args.nmse:
        res["nmse"] = nmse(_read_signal(args.nmse[0]), _read_signal(args.nmse[1]))
    if not res:
        raise UsageError("metrics: give at least one of --nsfe, --nssr, --msvr, --nmse")
    _emit(res)
    outputs = []
    if args.csv:
        keys = sorted(res)
        text = ",".join(keys) + "\n" + ",".join(repr(res[k]) for k in keys) + "\n"
        outputs.append(_write_text(args.csv, text))
    _manifest(args, outputs, _config(args, ["nsfe", "nssr", "msvr", "nmse", "csv"]))
    return EXIT_OK


def cmd_replay(args):
    man = _read_json(args.manifest_file)
    try:
        sub, config = man["subcommand"], dict(man["config"])
    except (KeyError, TypeError) as exc:
        raise UsageError(f"{args.manifest_file}: not a run manifest") from exc
    if sub not in HANDLERS:
        raise UsageError(f"{args.manifest_file}: unknown subcommand {sub!r}")
    parser = build_parser()
    ns = parser.parse_args([sub] + _required_stub(sub))
    for k, v in config.items():
        setattr(ns, k, v)
    ns.manifest = None
    ns.command = sub
    return HANDLERS[sub](ns)


def _required_stub(sub):
    """Placeholder values for required options; overwritten from the manifest."""
    stubs = {
        "decompose": ["--input", "_"], "project": ["--input", "_"],
        "bench-proj": ["--case", "1", "--n", "2"], "generate": ["--out", "_"],
        "train": ["--data", "_", "--method", "schur-proj"],
        "nearest-orthogonal": ["--input", "_"], "metrics": [],
    }
    return stubs[sub]


HANDLERS = {
    "decompose": cmd_decompose,
    "project": cmd_project,
    "bench-proj": cmd_bench_proj,
    "generate": cmd_generate,
    "train": cmd_train,
    "nearest-orthogonal": cmd_nearest_orthogonal,
    "metrics": cmd_metrics,
    "replay": cmd_replay,
}


def build_parser():
    p = argparse.ArgumentParser(prog="schurss", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--manifest", default=None,
                        help="manifest path (default: next to the first output)")
        return sp

    sp = add("decompose", "real Schur decomposition of a matrix")
    sp.add_argument("--input", required=True)
    sp.add_argument("--output")
    sp.add_argument("--eps", type=float, default=1e-12)

    sp = add("project", "stabilize a state matrix through its Schur factor")
    sp.add_argument("--input", required=True)
    sp.add_argument("--output")

    sp = add("bench-proj", "projection benchmark on the four matrix families")
    sp.add_argument("--case", type=int, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--trials", type=int, default=1)
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    sp.add_argument("--output")

    sp = add("generate", "random stable system and GBN dataset")
    sp.add_argument("--preset", choices=sorted(PRESETS))
    sp.add_argument("--nx", type=int)
    sp.add_argument("--nu", type=int)
    sp.add_argument("--ny", type=int)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--seqs", type=int)
    sp.add_argument("--sigma", type=float)
    sp.add_argument("--gbn-p", dest="gbn_p", type=float, default=0.1)
    sp.add_argument("--eig-bound", dest="eig_bound", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", required=True)

    sp = add("train", "fit a stable state-space model")
    sp.add_argument("--data", required=True)
    sp.add_argument("--method", required=True,
                    choices=["schur-proj", "schur-built", "regularized",
                             "schur_proj", "schur_built"])
    sp.add_argument("--epochs", type=int, default=2000)
    sp.add_argument("--patience", type=int, default=None,
                    help="epochs without improvement before stopping (default: never)")
    sp.add_argument("--lr", type=float, default=1e-3)
    sp.add_argument("--rho-r", dest="rho_r", type=float, default=1e-2)
    sp.add_argument("--eps-reg", dest="eps_reg", type=float, default=1e-3)
    sp.add_argument("--nx", type=int, default=5)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out")
    sp.add_argument("--history")

    sp = add("nearest-orthogonal", "nearest orthogonal matrix")
    sp.add_argument("--input", required=True)
    sp.add_argument("--method", choices=["svd", "eig", "iter"], default="svd")
    sp.add_argument("--iters", type=int, default=None)
    sp.add_argument("--output")

    sp = add("metrics", "NSFE / NSSR / MSVR / NMSE")
    sp.add_argument("--nsfe", nargs=2, metavar=("A", "X"))
    sp.add_argument("--nssr", nargs=2, metavar=("A", "X"))
    sp.add_argument("--msvr", metavar="A")
    sp.add_argument("--nmse", nargs=2, metavar=("Y", "YHAT"))
    sp.add_argument("--csv", help="also write the values as a one-row CSV")

    sp = sub.add_parser("replay", help="re-run a command from its manifest")
    sp.add_argument("manifest_file")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return HANDLERS[args.command](args)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except ConvergenceError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONVERGENCE
    except DivergenceError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DIVERGENCE
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_IO
    except (SchurSSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
