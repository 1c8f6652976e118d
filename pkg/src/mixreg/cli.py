"""Command-line interface.

Subcommands: ``gen`` (synthetic datasets), ``solve`` (fusion solve),
``certify`` (condition checks plus dual certificate), ``fit`` (solve,
cluster, refit), and ``phase`` (recovery-fraction grids).

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical or
certificate failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .certificate import build_certificate, verify_certificate
from .dataio import load_betas, load_csv, save_betas, save_csv, write_json
from .errors import (
    CertificateUndefinedError,
    DataValidationError,
    DegenerateModelError,
    MixregError,
    NumericalError,
)
from .geometry import check_conditions
from .model import MixtureModel, feasibility_residual
from .phase import DEFAULT_D_VALUES, PhaseConfig, run_phase, write_grid_csv, write_grid_pgm
from .pipeline import fit_pipeline
from .solver import SolverOptions, irls_solve
from .synth import Sim1Config, Sim2Config, gen_sim1, gen_sim2

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to code 2; keep 1 for usage
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--delta", type=float, default=1e-16, help="smoothing constant")
    p.add_argument("--max-iter", type=int, default=150, help="iteration cap")
    p.add_argument("--stop-tol", type=float, default=1e-5,
                   help="normalized step-norm stopping tolerance")
    p.add_argument("--delta-init", type=float, default=None,
                   help="enable geometric delta annealing from this value")
    p.add_argument("--delta-decay", type=float, default=0.5,
                   help="annealing decay factor per iteration")


def _solver_options(args) -> SolverOptions:
    return SolverOptions(
        delta=args.delta,
        max_iter=args.max_iter,
        stop_tol=args.stop_tol,
        delta_init=args.delta_init,
        delta_decay=args.delta_decay,
    )


def _write_estimates_csv(path, z: np.ndarray, labels=None) -> None:
    header = ",".join(f"z_{i + 1}" for i in range(z.shape[1]))
    lines = [header + (",label" if labels is not None else "")]
    for i in range(z.shape[0]):
        row = ",".join(repr(float(v)) for v in z[i])
        if labels is not None:
            row += f",{int(labels[i]) + 1}"
        lines.append(row)
    Path(path).write_text("\n".join(lines) + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mixreg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    p.add_argument("--sim", type=int, choices=(1, 2), required=True,
                   help="1 = aperture ensemble, 2 = imbalance ensemble")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--k", type=int, default=3, help="classes (aperture mode)")
    p.add_argument("--n-per-class", type=int, default=16,
                   help="points per class (aperture mode)")
    p.add_argument("--alpha", type=float, default=0.1, help="aperture radius")
    p.add_argument("--tau", type=float, default=0.0, help="imbalance radius")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True, help="dataset CSV path")
    p.add_argument("--betas-out", default=None, help="write the model as JSON")

    p = sub.add_parser("solve", help="run the fusion solver on a CSV dataset")
    p.add_argument("data", help="input CSV")
    p.add_argument("-o", "--output", required=True, help="estimates CSV path")
    p.add_argument("--trace-out", default=None, help="solve trace JSON path")
    _add_solver_flags(p)

    p = sub.add_parser("certify", help="check recovery conditions and certificate")
    p.add_argument("data", help="labeled CSV")
    p.add_argument("--betas", required=True, help="model JSON (from gen --betas-out)")
    p.add_argument("-o", "--output", default=None, help="verdict JSON path")
    p.add_argument("--tol", type=float, default=1e-8,
                   help="relative stationarity tolerance")

    p = sub.add_parser("fit", help="solve, cluster, and refit per class")
    p.add_argument("data", help="input CSV")
    p.add_argument("--k", type=int, required=True, help="number of classes")
    p.add_argument("-o", "--output", required=True, help="report JSON path")
    p.add_argument("--labels-out", default=None, help="labels CSV path")
    p.add_argument("--estimates-out", default=None, help="per-point estimates CSV")
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--center-column", type=int, default=None,
                   help="1-based feature column to center and rescale")
    p.add_argument("--center-alpha", type=float, default=1.0,
                   help="scale applied after centering")
    _add_solver_flags(p)

    p = sub.add_parser("phase", help="run a recovery-fraction grid")
    p.add_argument("--mode", choices=("aperture", "imbalance"), required=True)
    p.add_argument("--d", type=int, nargs="+", default=None,
                   help="dimension values (default 3..15)")
    p.add_argument("--values", type=float, nargs="+", default=None,
                   help="sweep values (default: 16 evenly spaced)")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--success-tol", type=float, default=1e-5)
    p.add_argument("--seed", type=int, default=0, help="base seed")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--unsafe", action="store_true",
                   help="allow sweep values outside the standard ranges")
    p.add_argument("-o", "--output", required=True,
                   help="output prefix (.csv, .pgm, .json)")
    _add_solver_flags(p)
    return parser


def _cmd_gen(args) -> int:
    if args.sim == 1:
        dataset, model = gen_sim1(Sim1Config(
            k=args.k, d=args.d, n_per_class=args.n_per_class,
            alpha=args.alpha, seed=args.seed,
        ))
    else:
        dataset, model = gen_sim2(Sim2Config(d=args.d, tau=args.tau, seed=args.seed))
    save_csv(dataset, args.output)
    if args.betas_out:
        save_betas(model, args.betas_out)
    print(f"wrote {dataset.m} rows (d={dataset.d}) to {args.output}")
    return EXIT_OK


def _cmd_solve(args) -> int:
    dataset = load_csv(args.data)
    estimates, trace = irls_solve(dataset, _solver_options(args))
    _write_estimates_csv(args.output, estimates.z)
    if args.trace_out:
        write_json(trace.to_dict(), args.trace_out)
    print(
        f"solved m={dataset.m} d={dataset.d}: iterations={trace.iterations} "
        f"converged={trace.converged} "
        f"feasibility={feasibility_residual(estimates, dataset):.3e}"
    )
    return EXIT_OK


def _cmd_certify(args) -> int:
    dataset = load_csv(args.data)
    if dataset.labels is None:
        raise DataValidationError("certify requires a label column")
    betas = load_betas(args.betas)
    model = MixtureModel(betas, dataset.class_sizes())
    conditions = check_conditions(dataset, model)
    payload: dict = {"conditions": conditions.to_dict()}
    try:
        cert = build_certificate(dataset, model)
        verdict = verify_certificate(cert, dataset, model, tol=args.tol)
        payload["certificate"] = verdict.to_dict()
        code = EXIT_OK
    except CertificateUndefinedError as exc:
        payload["certificate"] = {
            "defined": False,
            "error": str(exc),
            "row_index": exc.row_index,
            "certifies": False,
        }
        code = EXIT_NUMERIC
    if args.output:
        write_json(payload, args.output)
    else:
        import json

        print(json.dumps(payload, indent=2))
    if code == EXIT_OK:
        print(f"certifies: {payload['certificate']['certifies']}")
    else:
        print("certificate undefined", file=sys.stderr)
    return code


def _cmd_fit(args) -> int:
    dataset = load_csv(args.data)
    center = None if args.center_column is None else args.center_column - 1
    report, estimates = fit_pipeline(
        dataset,
        args.k,
        opts=_solver_options(args),
        restarts=args.restarts,
        seed=args.seed,
        center_column=center,
        center_alpha=args.center_alpha,
    )
    write_json(report.to_dict(), args.output)
    if args.labels_out:
        Path(args.labels_out).write_text(
            "label\n" + "\n".join(str(int(v) + 1) for v in report.labels) + "\n"
        )
    if args.estimates_out:
        _write_estimates_csv(args.estimates_out, estimates.z, report.labels)
    print(
        f"fit k={args.k}: iterations={report.trace.iterations} "
        f"max per-class residual={float(np.max(report.per_class_residual)):.3e}"
    )
    return EXIT_OK


def _cmd_phase(args) -> int:
    cfg = PhaseConfig(
        mode=args.mode,
        d_values=tuple(args.d) if args.d else DEFAULT_D_VALUES,
        sweep_values=tuple(args.values) if args.values else (),
        trials=args.trials,
        success_tol=args.success_tol,
        base_seed=args.seed,
        solver=_solver_options(args),
        unsafe=args.unsafe,
    )
    grid = run_phase(cfg, workers=args.workers)
    prefix = args.output
    write_grid_csv(grid, f"{prefix}.csv")
    write_grid_pgm(grid, f"{prefix}.pgm")
    write_json(grid.to_dict(), f"{prefix}.json")
    print(
        f"phase {cfg.mode}: {len(cfg.d_values)} x {len(cfg.sweep_values)} cells, "
        f"mean fraction {float(grid.fractions.mean()):.3f}; "
        f"wrote {prefix}.csv/.pgm/.json"
    )
    return EXIT_OK


_COMMANDS = {
    "gen": _cmd_gen,
    "solve": _cmd_solve,
    "certify": _cmd_certify,
    "fit": _cmd_fit,
    "phase": _cmd_phase,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except (DataValidationError, DegenerateModelError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, CertificateUndefinedError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except MixregError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
