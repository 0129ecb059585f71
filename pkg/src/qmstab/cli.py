"""Command-line interface tying the analysis stages into reproducible runs.

Each run writes a canonical JSON report (plus any series files) into the
output directory. Exit codes: 0 all requested checks hold, 1 at least one
fails, 2 inconclusive results present under --strict, 64 usage error,
65 input format error. Diagnostics go to standard error; machine-readable
output goes to files only.
"""

from __future__ import annotations

import argparse
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import (
    evolve,
    expectation_series,
    invariant_set_probe,
    lasalle_diagnostics,
    mean_bound_check,
)
from .generator import ModelSpec
from .invariants import (
    InvariantAnalysisError,
    connectivity_scan,
    steady_states,
    subharmonicity_check,
    uniqueness_check,
)
from .lyapunov import (
    COROLLARY_1,
    THEOREM_5,
    THEOREM_6,
    THEOREM_7,
    check_lasalle_pair,
    check_lyapunov,
    check_theorem8,
    check_weak_lyapunov,
)
from .operators import DensityMatrix, OperatorError, Verdict
from .serialize import (
    FormatError,
    complex_matrix_to_json,
    emit_series,
    jsonable,
    load_model,
    load_operator,
    save_model,
    write_json,
)
from .synthesis import SynthesisSpec, synthesize_coupling, verify_synthesis

EXIT_OK = 0
EXIT_FAILS = 1
EXIT_INCONCLUSIVE = 2
EXIT_USAGE = 64
EXIT_FORMAT = 65

_THEOREM_FLAGS = {"5": THEOREM_5, "6": THEOREM_6, "7": THEOREM_7, "8": "t8", "c1": COROLLARY_1}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 64, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="qmstab",
        description=(
            "Stability analysis of quantum Markov models: invariant states, "
            "Lyapunov and invariance-principle certificates, master-equation "
            "simulation, and coupling synthesis."
        ),
    )
    parser.add_argument("--version", action="version", version=f"qmstab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument(
            "--out",
            default=os.environ.get("QMSTAB_OUT", "."),
            help="output directory for the report and series files "
            "(default: $QMSTAB_OUT or the working directory)",
        )
        p.add_argument("--seed", type=int, default=0, help="seed for any sampling")
        p.add_argument("--tol", type=float, default=1e-9, help="check tolerance")
        p.add_argument(
            "--strict",
            action="store_true",
            help="exit 2 when any verdict is inconclusive",
        )
        p.add_argument(
            "--format",
            choices=("json", "csv", "svg"),
            default="csv",
            help="series output: separate csv/svg files, or json to embed "
            "series in the report",
        )

    p = sub.add_parser("analyze", help="invariant states, faithfulness, uniqueness, connectivity")
    p.add_argument("--model", required=True)
    p.add_argument("--v", help="operator whose spectral projections drive an extra connectivity scan")
    common(p)

    p = sub.add_parser("steady-state", help="stationary states from the Liouvillian null space")
    p.add_argument("--model", required=True)
    common(p)

    p = sub.add_parser("simulate", help="integrate the master equation and emit series")
    p.add_argument("--model", required=True)
    p.add_argument("--rho0", required=True, help="initial state file")
    p.add_argument("--t-final", type=float, required=True)
    p.add_argument("--v", help="observable V for a series and diagnostics")
    p.add_argument("--w", help="observable W for a series and diagnostics")
    p.add_argument("--c", type=float, help="rate for the mean-bound check")
    p.add_argument("--d", type=float, help="offset for the mean-bound check")
    p.add_argument("--method", choices=("auto", "expm_fixed", "rk_adaptive"), default="auto")
    p.add_argument("--points", type=int, default=201, help="number of sample times")
    common(p)

    p = sub.add_parser("check-lyapunov", help="strict or weak Lyapunov condition")
    p.add_argument("--model", required=True)
    p.add_argument("--v", required=True)
    p.add_argument("--c", type=float, help="weak-mode decay rate (with --d)")
    p.add_argument("--d", type=float, help="weak-mode offset (with --c)")
    common(p)

    p = sub.add_parser("check-lasalle", help="invariance-principle hypothesis pairs")
    p.add_argument("--model", required=True)
    p.add_argument("--v", required=True)
    p.add_argument("--w", help="companion operator (theorems 5-7, c1)")
    p.add_argument("--u", help="relaxation operator (corollary c1)")
    p.add_argument("--theorem", choices=sorted(_THEOREM_FLAGS), required=True)
    common(p)

    p = sub.add_parser("synthesize", help="engineer couplings for a target operator")
    p.add_argument("--v", required=True, help="target operator file")
    p.add_argument("--hamiltonian", help="optional Hamiltonian file")
    p.add_argument("--magnitude", type=float, default=1.0, help="coupling amplitude |l|")
    p.add_argument(
        "--pairs",
        help="comma list hi:lo of ascending distinct-eigenvalue indices "
        "(default: every adjacent pair)",
    )
    p.add_argument("--no-compensate", action="store_true", help="skip Hamiltonian compensation")
    common(p)

    p = sub.add_parser("probe-invariant-set", help="sample convergence onto the ground set of V")
    p.add_argument("--model", required=True)
    p.add_argument("--v", required=True)
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--t-final", type=float, default=30.0)
    p.add_argument("--threshold", type=float, default=1e-5)
    common(p)

    return parser


# ---------------------------------------------------------------------------
# Report assembly
# ---------------------------------------------------------------------------

class _Run:
    def __init__(self, args):
        self.args = args
        self.outdir = Path(args.out)
        self.checks: list[dict] = []
        self.series_files: list[str] = []
        self.inputs: dict = {}

    def add_check(self, name: str, anchor: str, verdict, tolerance: float, **data) -> None:
        verdict = verdict.value if isinstance(verdict, Verdict) else str(verdict)
        entry = {"name": name, "anchor": anchor, "verdict": verdict, "tolerance": tolerance}
        entry.update({k: jsonable(v) for k, v in data.items()})
        self.checks.append(entry)

    def add_series(self, stem: str, times, values) -> dict:
        if self.args.format == "json":
            return {"t": [float(x) for x in times], "value": [float(x) for x in values]}
        path = self.outdir / f"{stem}.{self.args.format}"
        emit_series(times, values, path, fmt=self.args.format, name=stem)
        self.series_files.append(path.name)
        return {"file": path.name}

    def finish(self) -> int:
        verdicts = [c["verdict"] for c in self.checks]
        report = {
            "meta": {"timestamp": datetime.now(timezone.utc).isoformat()},
            "run": {
                "version": __version__,
                "command": self.args.command,
                "seed": self.args.seed,
                "tolerance": self.args.tol,
                "inputs": self.inputs,
                "checks": self.checks,
                "series_files": sorted(self.series_files),
            },
        }
        write_json(report, self.outdir / "report.json")
        if any(v == "fails" for v in verdicts):
            return EXIT_FAILS
        if self.args.strict and any(v == "inconclusive" for v in verdicts):
            return EXIT_INCONCLUSIVE
        return EXIT_OK


def _load_model_arg(run: _Run):
    model, labels = load_model(run.args.model)
    run.inputs["model"] = str(run.args.model)
    if labels:
        run.inputs["labels"] = labels
    return model


def _load_operator_arg(run: _Run, flag: str, what: str):
    path = getattr(run.args, flag)
    arr = load_operator(path, what)
    run.inputs[what] = str(path)
    return arr


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_steady_common(run: _Run, model: ModelSpec):
    report = steady_states(model, tol=run.args.tol)
    run.add_check(
        "invariant-state-exists",
        "Theorem 1",
        Verdict.HOLDS if report.states else Verdict.FAILS,
        run.args.tol,
        null_dimension=report.null_dimension,
        residuals=list(report.residuals),
        reliable=list(report.reliable),
        states=[s.matrix for s in report.states],
        notes=list(report.notes),
    )
    return report


def cmd_steady_state(run: _Run) -> None:
    model = _load_model_arg(run)
    _cmd_steady_common(run, model)


def cmd_analyze(run: _Run) -> None:
    model = _load_model_arg(run)
    report = _cmd_steady_common(run, model)

    for i, state in enumerate(report.states):
        run.add_check(
            f"faithful[{i}]",
            "Definition 1",
            Verdict.HOLDS if report.faithful[i] else Verdict.FAILS,
            run.args.tol,
            rank=int(np.trace(report.support_projections[i]).real.round()),
            support=report.support_projections[i],
        )
        sub = subharmonicity_check(model, report.support_projections[i], tol=1e-7)
        run.add_check(
            f"support-subharmonic[{i}]",
            "Proposition 1",
            sub.verdict,
            1e-7,
            min_eigenvalue=sub.min_eigenvalue,
        )

    if model.dim <= 24:
        uni = uniqueness_check(model, tol=run.args.tol)
        run.add_check(
            "unique-invariant-state",
            "Theorem 3",
            {
                "unique": Verdict.HOLDS,
                "not_unique": Verdict.FAILS,
                "inconclusive": Verdict.INCONCLUSIVE,
            }[uni.verdict],
            run.args.tol,
            commutant_dimension=uni.commutant_dimension,
            span_dimension=uni.span_dimension,
            null_dimension=report.null_dimension,
        )
    else:
        run.add_check(
            "unique-invariant-state",
            "Theorem 3",
            Verdict.HOLDS if report.unique == "unique" else (
                Verdict.FAILS if report.unique == "not_unique" else Verdict.INCONCLUSIVE
            ),
            run.args.tol,
            method="liouvillian null dimension (commutant check skipped above dim 24)",
            null_dimension=report.null_dimension,
        )

    scan = connectivity_scan(model, "coordinate")
    run.add_check(
        "connectivity(coordinate family)",
        "Remark 1",
        Verdict.HOLDS if scan.all_connected else Verdict.FAILS,
        run.args.tol,
        values={r.label: r.value for r in scan.results},
        note=scan.note,
    )
    if run.args.v:
        varr = _load_operator_arg(run, "v", "v")
        scan_v = connectivity_scan(model, varr)
        run.add_check(
            "connectivity(spectral family of V)",
            "Remark 1",
            Verdict.HOLDS if scan_v.all_connected else Verdict.FAILS,
            run.args.tol,
            values={r.label: r.value for r in scan_v.results},
            note=scan_v.note,
        )


def cmd_simulate(run: _Run) -> None:
    model = _load_model_arg(run)
    rho0 = DensityMatrix.from_matrix(_load_operator_arg(run, "rho0", "rho0"))
    traj = evolve(
        model,
        rho0,
        run.args.t_final,
        method=run.args.method,
        n_points=run.args.points,
    )
    trace_dev = max(abs(np.trace(s.matrix).real - 1.0) for s in traj.states)
    run.add_check(
        "trace-preservation",
        "Definition 1",
        Verdict.HOLDS if trace_dev <= 1e-10 else Verdict.FAILS,
        1e-10,
        max_trace_deviation=trace_dev,
        step_controller=traj.step_controller,
    )

    observables = []
    if run.args.v:
        observables.append(("series_v", _load_operator_arg(run, "v", "v")))
    if run.args.w:
        observables.append(("series_w", _load_operator_arg(run, "w", "w")))
    if not observables:
        for i in range(model.dim):
            proj = np.zeros((model.dim, model.dim), dtype=complex)
            proj[i, i] = 1.0
            observables.append((f"series_pop{i:03d}", proj))
    series_meta = {}
    for stem, op in observables:
        series_meta[stem] = run.add_series(stem, traj.times, expectation_series(traj, op))
    run.add_check(
        "series-emitted", "Definition 7", Verdict.HOLDS, run.args.tol, series=series_meta
    )

    if run.args.v and run.args.w:
        diag = lasalle_diagnostics(
            traj,
            load_operator(run.args.v, "v"),
            load_operator(run.args.w, "w"),
            c=run.args.c,
            d=run.args.d,
        )
        run.add_check(
            "lasalle-diagnostics",
            "Theorem 5",
            Verdict.HOLDS if diag.conclusive else Verdict.INCONCLUSIVE,
            run.args.tol,
            v_monotone=diag.v_monotone,
            v_monotone_max_violation=diag.v_monotone_max_violation,
            v_sup=diag.v_sup,
            w_integral_estimate=diag.w_integral_estimate,
            w_limit_estimate=diag.w_limit_estimate,
            w_final=diag.w_final,
            notes=list(diag.notes),
        )
    if run.args.v and run.args.c is not None and run.args.d is not None:
        bound = mean_bound_check(
            traj, load_operator(run.args.v, "v"), run.args.c, run.args.d
        )
        run.add_check(
            "mean-bound",
            "Eq. (1)",
            bound.verdict,
            1e-6,
            max_violation=bound.max_violation,
            worst_time=bound.worst_time,
        )
    run.add_check(
        "final-state",
        "Definition 7",
        Verdict.HOLDS,
        run.args.tol,
        t=float(traj.times[-1]),
        state=traj.final_state.matrix,
    )


def cmd_check_lyapunov(run: _Run) -> None:
    model = _load_model_arg(run)
    varr = _load_operator_arg(run, "v", "v")
    if (run.args.c is None) != (run.args.d is None):
        raise FormatError("weak mode needs both --c and --d")
    if run.args.c is not None:
        cert = check_weak_lyapunov(model, varr, run.args.c, run.args.d, tol=run.args.tol)
        run.add_check(
            "weak-lyapunov",
            "Eq. (1)",
            cert.verdict,
            run.args.tol,
            c=cert.c,
            d=cert.d,
            metrics=cert.metrics,
        )
    else:
        cert = check_lyapunov(model, varr, tol=run.args.tol)
        run.add_check(
            "strict-lyapunov",
            "Definition 2",
            cert.verdict,
            run.args.tol,
            metrics=cert.metrics,
            witness=cert.witness,
        )


def cmd_check_lasalle(run: _Run) -> None:
    model = _load_model_arg(run)
    varr = _load_operator_arg(run, "v", "v")
    theorem = _THEOREM_FLAGS[run.args.theorem]
    if theorem == "t8":
        rep = check_theorem8(model, varr, tol=run.args.tol)
        run.add_check(
            "ground-convergence",
            "Theorem 8",
            rep.verdict,
            run.args.tol,
            commutator_norm=rep.commutator_norm,
            restricted_min_eigenvalue=rep.restricted_min_eigenvalue,
            kernel_dim=rep.kernel_dim,
            notes=list(rep.notes),
        )
        return
    if not run.args.w:
        raise FormatError(f"theorem {run.args.theorem} needs --w")
    warr = _load_operator_arg(run, "w", "w")
    uarr = _load_operator_arg(run, "u", "u") if run.args.u else None
    cert = check_lasalle_pair(model, varr, warr, theorem=theorem, u=uarr, tol=run.args.tol)
    run.add_check(
        f"lasalle-{run.args.theorem}",
        {
            THEOREM_5: "Theorem 5",
            THEOREM_6: "Theorem 6",
            THEOREM_7: "Theorem 7",
            COROLLARY_1: "Corollary 1",
        }[theorem],
        cert.verdict,
        run.args.tol,
        shift=cert.shift,
        metrics=cert.metrics,
        notes=list(cert.notes),
    )


def cmd_synthesize(run: _Run) -> None:
    varr = _load_operator_arg(run, "v", "v")
    h = None
    if run.args.hamiltonian:
        h = load_operator(run.args.hamiltonian, "hamiltonian")
        run.inputs["hamiltonian"] = str(run.args.hamiltonian)
    pairs = None
    if run.args.pairs:
        try:
            pairs = tuple(
                (int(a), int(b))
                for a, b in (item.split(":") for item in run.args.pairs.split(","))
            )
        except ValueError as exc:
            raise FormatError(f"cannot parse --pairs {run.args.pairs!r}: {exc}") from exc
    spec = SynthesisSpec(
        v=varr,
        hamiltonian=h,
        coupling_magnitude=run.args.magnitude,
        pair_selection=pairs,
        compensate=not run.args.no_compensate,
    )
    result = synthesize_coupling(spec, tol=run.args.tol)
    n = varr.shape[0]
    model = ModelSpec(
        h if h is not None else np.zeros((n, n), dtype=complex),
        list(result.couplings) or [np.zeros((n, n), dtype=complex)],
    )
    save_model(model, run.outdir / "synthesized_model.json")
    verification = verify_synthesis(result, model)
    run.add_check(
        "synthesis",
        "Appendix cases A/B/C",
        result.certificate.verdict,
        run.args.tol,
        pair_cases=list(result.pair_cases),
        couplings=[complex_matrix_to_json(c) for c in result.couplings],
        generator=result.generator_matrix,
        level_values=list(result.level_values),
        notes=list(result.notes),
        model_file="synthesized_model.json",
    )
    run.add_check(
        "synthesis-verification",
        "Appendix cases A/B/C",
        verification.verdict,
        1e-10,
        max_block_deviation=verification.max_block_deviation,
    )


def cmd_probe(run: _Run) -> None:
    model = _load_model_arg(run)
    varr = _load_operator_arg(run, "v", "v")
    probe = invariant_set_probe(
        model,
        varr,
        samples=run.args.samples,
        t_final=run.args.t_final,
        threshold=run.args.threshold,
        seed=run.args.seed,
    )
    run.add_check(
        "invariant-set-probe",
        "Theorem 8",
        probe.verdict,
        run.args.threshold,
        max_final=probe.max_final,
        final_values=[float(x) for x in probe.final_values],
        samples=probe.samples,
        t_final=probe.t_final,
    )


_COMMANDS = {
    "analyze": cmd_analyze,
    "steady-state": cmd_steady_state,
    "simulate": cmd_simulate,
    "check-lyapunov": cmd_check_lyapunov,
    "check-lasalle": cmd_check_lasalle,
    "synthesize": cmd_synthesize,
    "probe-invariant-set": cmd_probe,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    run = _Run(args)
    try:
        run.outdir.mkdir(parents=True, exist_ok=True)
        _COMMANDS[args.command](run)
    except (FormatError, OperatorError, InvariantAnalysisError) as exc:
        print(f"qmstab: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    return run.finish()


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
