"""Command-line front end.

Subcommands:

* ``generate string`` / ``generate line`` -- write a synthetic dataset
  (Y.csv, plus D_true.csv for strings and mask.csv when rows are subsampled).
* ``factorize`` -- run the certified solver on Y.csv, writing D.csv, X.csv,
  k.csv and trace.json.
* ``complete`` -- the masked variant; requires ``--mask``.
* ``evaluate`` -- metrics on a recovered D (mode error against a ground
  truth, partitioned energies and their mean entropy), writing report.json.

The solver operates on the sample grid (unit spacing); recovered wavenumbers
are converted to physical units through ``--dl`` when k.csv is written.  All
outputs are written atomically (temp file + rename).  ``WAVEFACTOR_THREADS``
caps kernel parallelism.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import tempfile
import time
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .datagen import LineSpec, StringSpec, gen_line, gen_string, subsample_rows
from .errors import DataError, UsageError, WaveFactorError
from .laplacian import BoundaryCondition, build
from .metrics import Partition, mean_entropy, mode_error, partition_energy, svt_oracle
from .objective import WaveField
from .solver import SolverConfig, complete, fit

TRACE_SCHEMA = 1
REPORT_SCHEMA = 1


@dataclasses.dataclass
class RunConfig:
    """Resolved command configuration; round-trips losslessly through JSON."""

    command: str
    out: str
    input: Optional[str] = None
    mask: Optional[str] = None
    truth: Optional[str] = None
    modes_path: Optional[str] = None
    factors_path: Optional[str] = None
    bc: str = "dirichlet"
    dl: float = 1.0
    dt: float = 1.0
    gamma: float = 0.0
    lam: float = 1.0
    polar_tol: float = 1e-3
    seed: int = 0
    max_outer: int = 100
    bcd_epochs: int = 500
    bcd_grad_tol: float = 1e-6
    generator: Optional[dict] = None
    partition: Optional[list[int]] = None
    top_m: Optional[int] = None
    plots: bool = False
    header: bool = False

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls(**json.loads(text))


# ---------------------------------------------------------------------------
# matrix file IO
# ---------------------------------------------------------------------------

def _atomic_write(path: str, writer) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as fh:
            writer(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def store_matrix(matrix: np.ndarray, path: str, header: bool = False) -> None:
    """Write a matrix as comma-separated rows at full float precision."""
    arr = np.atleast_2d(np.asarray(matrix, dtype=float))

    def writer(fh):
        if header:
            fh.write(",".join(f"c{i}" for i in range(arr.shape[1])) + "\n")
        for row in arr:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")

    _atomic_write(path, writer)


def load_matrix(path: str, header: bool = False) -> np.ndarray:
    """Read a CSV matrix; rejects empty, ragged, or non-numeric input."""
    try:
        with open(path) as fh:
            lines = [line.strip() for line in fh]
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    if header and lines:
        lines = lines[1:]
    lines = [line for line in lines if line]
    if not lines:
        raise DataError(f"empty input file: {path}")
    rows = []
    width = None
    for ln, line in enumerate(lines, start=1):
        cells = line.split(",")
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise DataError(f"{path}:{ln}: ragged row ({len(cells)} != {width} cells)")
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise DataError(f"{path}:{ln}: non-numeric cell") from exc
    return np.asarray(rows, dtype=float)


def _store_json(payload: dict, path: str) -> None:
    _atomic_write(path, lambda fh: fh.write(json.dumps(payload, indent=2) + "\n"))


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we want exit 1
        raise UsageError(message)


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gamma", type=float, default=0.0,
                   help="wave-penalty weight (0 gives the low-rank baseline)")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0,
                   help="trade-off weight on the factor regularizer")
    p.add_argument("--polar-tol", type=float, default=1e-3,
                   help="certificate slack: stop once the value is below 1+tol")
    p.add_argument("--max-outer", type=int, default=100)
    p.add_argument("--bcd-epochs", type=int, default=500)
    p.add_argument("--bcd-grad-tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bc", choices=[b.value for b in BoundaryCondition],
                   default="dirichlet")
    p.add_argument("--dl", type=float, default=1.0,
                   help="physical grid spacing, used to rescale reported wavenumbers")
    p.add_argument("--dt", type=float, default=1.0)


def _build_parser() -> _Parser:
    parser = _Parser(prog="wavefactor",
                     description="Wave-informed matrix factorization")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic dataset")
    gen_sub = gen.add_subparsers(dest="generator", required=True)

    gs = gen_sub.add_parser("string", help="superposed standing modes")
    gs.add_argument("--modes", type=int, default=10)
    gs.add_argument("--amp", type=float, default=10.0)
    gs.add_argument("--k0", type=float, default=2 * np.pi)
    gs.add_argument("--omega0", type=float, default=12 * np.pi)
    gs.add_argument("--damp-time-scale", type=float, default=0.0,
                    help="time damping alpha_n = scale*n")
    gs.add_argument("--damp-space-scale", type=float, default=0.0,
                    help="space damping beta_n = scale*n")
    gs.add_argument("--noise-var", type=float, default=0.0)
    gs.add_argument("--rows", type=int, default=200)
    gs.add_argument("--cols", type=int, default=400)
    gs.add_argument("--dl", type=float, default=None)
    gs.add_argument("--dt", type=float, default=None)
    gs.add_argument("--seed", type=int, default=0)
    gs.add_argument("--observe-rows", type=_int_list, default=None,
                    help="also write mask.csv observing only these rows")
    gs.add_argument("--out", required=True)
    gs.add_argument("--header", action="store_true")

    gl = gen_sub.add_parser("line", help="piecewise-speed line simulation")
    gl.add_argument("--boundaries", type=_float_list, default=[0.4],
                    help="segment interfaces (positions along the line)")
    gl.add_argument("--ratios", type=_float_list, default=[1.0, 4.0],
                    help="wavenumber ratio per segment")
    gl.add_argument("--center-freq", type=float, default=10.0)
    gl.add_argument("--bandwidth", type=float, default=10.0)
    gl.add_argument("--boundary-loss", type=float, default=1.0)
    gl.add_argument("--wave-speed", type=float, default=None)
    gl.add_argument("--rows", type=int, default=100)
    gl.add_argument("--cols", type=int, default=1200)
    gl.add_argument("--dl", type=float, default=0.01)
    gl.add_argument("--dt", type=float, default=1e-3)
    gl.add_argument("--seed", type=int, default=0)
    gl.add_argument("--observe-rows", type=_int_list, default=None)
    gl.add_argument("--out", required=True)
    gl.add_argument("--header", action="store_true")

    for name, help_text in (("factorize", "run the certified solver"),
                            ("complete", "masked completion variant")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--input", required=True, help="path to Y.csv")
        p.add_argument("--mask", default=None, help="path to a 0/1 mask CSV")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--plots", action="store_true")
        p.add_argument("--header", action="store_true")
        _add_solver_flags(p)

    ev = sub.add_parser("evaluate", help="metrics on recovered modes")
    ev.add_argument("--d", dest="modes_path", required=True, help="path to D.csv")
    ev.add_argument("--x", dest="factors_path", default=None,
                    help="path to X.csv for significance weights")
    ev.add_argument("--truth", default=None, help="ground-truth modes CSV")
    ev.add_argument("--partition", type=_int_list, default=None,
                    help="spatial split indices for partition energies")
    ev.add_argument("--top-m", type=int, default=None)
    ev.add_argument("--header", action="store_true")
    ev.add_argument("--out", required=True)
    return parser


# ---------------------------------------------------------------------------
# command implementations
# ---------------------------------------------------------------------------

def _cmd_generate(args) -> int:
    out = args.out
    header = args.header
    if args.generator == "string":
        spec = StringSpec.harmonic(
            num_modes=args.modes, amplitude=args.amp, k0=args.k0,
            omega0=args.omega0, damp_time_scale=args.damp_time_scale,
            damp_space_scale=args.damp_space_scale, noise_var=args.noise_var,
            rows=args.rows, cols=args.cols, dl=args.dl, dt=args.dt,
            seed=args.seed)
        field, d_true = gen_string(spec)
        store_matrix(d_true, os.path.join(out, "D_true.csv"), header)
        generator = {"kind": "string", **_spec_dict(spec)}
    else:
        spec = LineSpec(segment_boundaries=tuple(args.boundaries),
                        wavenumber_ratios=tuple(args.ratios),
                        center_freq=args.center_freq, bandwidth=args.bandwidth,
                        boundary_loss=args.boundary_loss, rows=args.rows,
                        cols=args.cols, dl=args.dl, dt=args.dt,
                        wave_speed=args.wave_speed, seed=args.seed)
        field = gen_line(spec)
        generator = {"kind": "line", **_spec_dict(spec)}

    if args.observe_rows is not None:
        field = subsample_rows(field, args.observe_rows)
        store_matrix(field.mask, os.path.join(out, "mask.csv"), header)
    store_matrix(field.Y, os.path.join(out, "Y.csv"), header)
    cfg = RunConfig(command="generate", out=out, dl=field.dl, dt=field.dt,
                    seed=args.seed, generator=generator, header=header)
    _atomic_write(os.path.join(out, "config.json"), lambda fh: fh.write(cfg.to_json() + "\n"))
    print(f"wrote {os.path.join(out, 'Y.csv')} ({field.shape[0]}x{field.shape[1]})")
    return 0


def _spec_dict(spec) -> dict:
    d = dataclasses.asdict(spec)
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}


def _cmd_factorize(args, masked_command: bool) -> int:
    Y = load_matrix(args.input, args.header)
    if not np.all(np.isfinite(Y)):
        raise DataError(f"{args.input}: non-finite data")
    mask = None
    if args.mask is not None:
        mask = load_matrix(args.mask, args.header)
    elif masked_command:
        raise UsageError("complete requires --mask")
    field = WaveField(Y=Y, dl=args.dl, dt=args.dt, mask=mask)

    # the solve runs on the sample grid; --dl only rescales reported k
    op = build(Y.shape[0], 1.0, BoundaryCondition.from_name(args.bc))
    solver_cfg = SolverConfig(gamma=args.gamma, lam=args.lam,
                              polar_tol=args.polar_tol,
                              bcd_max_epochs=args.bcd_epochs,
                              bcd_grad_tol=args.bcd_grad_tol,
                              max_outer_iters=args.max_outer, seed=args.seed)
    model, trace = complete(field, op, solver_cfg) if masked_command else fit(field, op, solver_cfg)

    out = args.out
    store_matrix(model.D, os.path.join(out, "D.csv"), args.header)
    store_matrix(model.X, os.path.join(out, "X.csv"), args.header)
    store_matrix(model.k.reshape(-1, 1) / args.dl, os.path.join(out, "k.csv"), args.header)

    payload = {
        "schema": TRACE_SCHEMA,
        "objective_history": list(trace.objective_history),
        "polar_history": list(trace.polar_history),
        "rank_history": list(trace.rank_history),
        "status": trace.status.value,
        "final_polar": trace.final_polar,
        "rank": model.rank,
        "timestamp": time.time(),
    }
    if args.gamma == 0.0:
        reference = svt_oracle(field.mask_or_ones() * Y, args.lam)
        approx = model.product()
        scale = max(np.linalg.norm(reference), 1e-300)
        payload["svt_relative_error"] = float(np.linalg.norm(approx - reference) / scale)

    _store_json(payload, os.path.join(out, "trace.json"))
    run_cfg = RunConfig(command="complete" if masked_command else "factorize",
                        out=out, input=args.input, mask=args.mask, bc=args.bc,
                        dl=args.dl, dt=args.dt, gamma=args.gamma, lam=args.lam,
                        polar_tol=args.polar_tol, seed=args.seed,
                        max_outer=args.max_outer, bcd_epochs=args.bcd_epochs,
                        bcd_grad_tol=args.bcd_grad_tol, plots=args.plots,
                        header=args.header)
    _atomic_write(os.path.join(out, "config.json"), lambda fh: fh.write(run_cfg.to_json() + "\n"))
    if args.plots:
        _write_plots(out, model, trace, args.header)
    print(f"status={trace.status.value} rank={model.rank} "
          f"final_polar={trace.final_polar:.6f}")
    return 0


def _write_plots(out: str, model, trace, header: bool) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    store_matrix(np.asarray(trace.objective_history).reshape(-1, 1),
                 os.path.join(out, "objective_history.csv"), header)
    store_matrix(np.asarray(trace.polar_history).reshape(-1, 1),
                 os.path.join(out, "polar_history.csv"), header)

    fig, axes = plt.subplots(1, 2, figsize=(9, 3.2))
    axes[0].semilogy(trace.objective_history)
    axes[0].set_xlabel("epoch")
    axes[0].set_ylabel("objective")
    axes[1].plot(trace.polar_history, marker="o")
    axes[1].axhline(1.0, color="k", lw=0.8, ls="--")
    axes[1].set_xlabel("outer iteration")
    axes[1].set_ylabel("certificate value")
    fig.tight_layout()
    fig.savefig(os.path.join(out, "trace.svg"))
    plt.close(fig)

    if model.rank:
        show = min(model.rank, 8)
        fig, axes = plt.subplots(show, 1, figsize=(7, 1.1 * show), sharex=True)
        axes = np.atleast_1d(axes)
        weights = np.linalg.norm(model.D, axis=0) * np.linalg.norm(model.X, axis=0)
        order = np.argsort(-weights)[:show]
        for ax, j in zip(axes, order):
            ax.plot(model.D[:, j], lw=0.9)
            ax.set_ylabel(f"col {j}", fontsize=8)
        axes[-1].set_xlabel("spatial sample")
        fig.tight_layout()
        fig.savefig(os.path.join(out, "modes.svg"))
        plt.close(fig)


def _cmd_evaluate(args) -> int:
    D = load_matrix(args.modes_path, args.header)
    report: dict = {"schema": REPORT_SCHEMA, "columns": D.shape[1]}
    if args.truth is not None:
        truth = load_matrix(args.truth, args.header)
        pct = mode_error(D, truth)
        report["mode_error_percent"] = pct
        report["aligned_sq_frobenius"] = (pct / 100.0) ** 2 * float(
            np.linalg.norm(truth) ** 2)
    if args.partition:
        if args.factors_path is not None:
            X = load_matrix(args.factors_path, args.header)
            weights = (np.linalg.norm(D, axis=0) * np.linalg.norm(X, axis=0)) ** 2
        else:
            weights = np.linalg.norm(D, axis=0) ** 2
        top_m = args.top_m if args.top_m else min(D.shape[1], 30)
        fractions = partition_energy(D, Partition(tuple(args.partition)),
                                     top_m, weights)
        report["partition_energy"] = fractions.tolist()
        if fractions.shape[1] == 2:
            report["mean_entropy"] = mean_entropy(fractions)
    _store_json(report, os.path.join(args.out, "report.json"))
    keys = ", ".join(k for k in report if k != "schema")
    print(f"wrote report.json ({keys})")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def run(argv: Sequence[str]) -> int:
    """Execute one command; returns the process exit code."""
    threads = os.environ.get("WAVEFACTOR_THREADS")
    if threads:
        try:
            _kernels.configure_threads(int(threads))
        except ValueError:
            print(f"ignoring invalid WAVEFACTOR_THREADS={threads!r}", file=sys.stderr)

    parser = _build_parser()
    try:
        args = parser.parse_args(list(argv))
        if args.command == "generate":
            return _cmd_generate(args)
        if args.command == "factorize":
            return _cmd_factorize(args, masked_command=False)
        if args.command == "complete":
            return _cmd_factorize(args, masked_command=True)
        return _cmd_evaluate(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (WaveFactorError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
