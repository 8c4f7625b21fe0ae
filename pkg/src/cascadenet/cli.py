"""Command-line front end.

    cascadenet [--json] [--out DIR] [--seed-override SEED [--force]] COMMAND SCENARIO ...

Commands: simulate, equilibria, signiter, validate. SCENARIO is a path to a
scenario file, a directory of ``*.scenario`` files, or the name of a bundled
scenario. Exit codes: 0 success, 2 input error, 3 analysis infeasible,
4 internal assertion.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import dynamics, equilibria, signiter
from .errors import CascadeError, InputError, TooLarge, ValidationFailure
from .numerics import frobenius_eigenvalue, is_schur_by_column_sums
from .scenario_io import export_topology, export_trajectory, write_artifact
from .scenario_io.scenario import ScenarioFile, fmt_num, resolve_scenario_path


class CliError(InputError):
    pass


def _num(x) -> float:
    return float(fmt_num(x))


def _vec(x) -> list[float]:
    return [_num(v) for v in np.asarray(x).ravel()]


def _signs(sigma) -> str:
    return "".join("+" if s > 0 else "-" for s in np.asarray(sigma))


def _ids(sc: ScenarioFile, idx) -> list[str]:
    ids = sc.network.node_ids()
    return [ids[i] for i in idx]


# -- commands ----------------------------------------------------------------


def cmd_simulate(sc: ScenarioFile, args) -> dict:
    net = sc.network
    horizon = args.horizon or sc.horizon
    traj = dynamics.simulate(net, sc.V0, sc.price_signal, horizon, sc.conv_tol, sc.confirm_window)
    out_dir = Path(args.out) / sc.name
    artifacts = [
        str(write_artifact(out_dir / f"{sc.name}_trajectory.csv", export_trajectory(traj, "csv"))),
        str(write_artifact(out_dir / f"{sc.name}_trajectory.json", export_trajectory(traj, "json"))),
    ]
    for t in args.snapshots:
        if 0 <= t <= traj.horizon:
            data = export_topology(net, traj.states[t], args.topology_format, t=t, name=sc.name)
            path = out_dir / f"{sc.name}_topology_t{t}.{args.topology_format}"
            artifacts.append(str(write_artifact(path, data)))

    failed = traj.failed_set()
    report = {
        "command": "simulate",
        "scenario": sc.name,
        "n": net.n,
        "horizon": horizon,
        "converged": traj.converged,
        "settle_time": traj.settle_time,
        "final_failed": _ids(sc, failed),
        "final_V": _vec(traj.final),
        "final_nonnegative": bool(np.all(traj.final >= 0)),
    }
    if traj.converged:
        # closed-form rest point for the settled failure pattern, at the final prices
        ts = equilibria.translate(net.with_prices(sc.price_signal.at(horizon)))
        phi = traj.indicators[-1]
        v_eq = ts.P @ (ts.r - ts.beta * phi) + ts.v_threshold
        report["equilibrium_residual"] = _num(np.max(np.abs(traj.final - v_eq)))
    report["artifacts"] = artifacts
    status = f"converged at t={traj.settle_time}" if traj.converged else "did not converge"
    names = ", ".join(report["final_failed"]) or "none"
    report["summary"] = f"{status}; {len(failed)} failed at t={horizon}: {names}"
    return report


def _parse_indices(text: str, sc: ScenarioFile) -> list[int]:
    ids = sc.network.node_ids()
    if text.strip().lower() == "all":
        return list(range(len(ids)))
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if tok not in ids:
            raise CliError(f"unknown node id {tok!r} in --certificate (known: {', '.join(ids)})")
        out.append(ids.index(tok))
    return out


def cmd_equilibria(sc: ScenarioFile, args) -> dict:
    net = sc.network
    ts = equilibria.translate(net)
    want_enum = args.enumerate or not args.regime
    want_regime = args.regime or not args.enumerate
    margin = dynamics.positivity_margin(net)
    report = {
        "command": "equilibria",
        "scenario": sc.name,
        "n": net.n,
        "positivity": {"ok": dynamics.check_positivity_condition(net), "margin": _vec(margin)},
    }
    reg = equilibria.classify_regime(ts, net)
    if want_regime:
        report["regime"] = {
            "pos_eq_exists": reg.pos_eq_exists,
            "pos_eq_unique_overall": reg.pos_eq_unique_overall,
            "neg_eq_exists": reg.neg_eq_exists,
            "neg_eq_unique_overall": reg.neg_eq_unique_overall,
        }
    report["n_failed_bounds"] = [reg.n_f_lower, reg.n_f_upper]
    summary = []
    if want_enum:
        if net.n > args.max_n:
            raise TooLarge(
                f"enumeration needs n <= {args.max_n}, scenario has n = {net.n}; "
                "use `cascadenet signiter` for the worst/best rest points"
            )
        eqs = equilibria.enumerate_equilibria(ts, max_n=args.max_n)
        rows = []
        for e in eqs:
            st = equilibria.stability_report(e, net)
            rows.append(
                {
                    "orthant": e.k,
                    "failed": _ids(sc, np.flatnonzero(e.phi_k)),
                    "V": _vec(e.v_bar),
                    "stability": "stable" if st.stable else "fragile",
                }
            )
        report["equilibria"] = rows
        if len(rows) == 1:
            summary.append(f"unique equilibrium, orthant {rows[0]['orthant']}, {rows[0]['stability']}")
        else:
            summary.append(f"{len(rows)} equilibria")
    if args.certificate:
        idx = _parse_indices(args.certificate, sc)
        lam = frobenius_eigenvalue(np.asarray(net.C)[np.ix_(idx, idx)]).radius
        ok = equilibria.no_all_fail_certificate(net, idx)
        report["certificate"] = {"indices": _ids(sc, idx), "lambda_F": _num(lam), "no_all_fail": ok}
        summary.append("some organization stays healthy" if ok else "certificate inconclusive")
    summary.append(f"n_F ∈ [{reg.n_f_lower}, {reg.n_f_upper}]")
    report["summary"] = "; ".join(summary)
    return report


def cmd_signiter(sc: ScenarioFile, args) -> dict:
    net = sc.network
    ts = equilibria.translate(net)
    report = {"command": "signiter", "scenario": sc.name, "n": net.n}
    labels = signiter.fixed_sign_classification(ts)
    report["node_labels"] = dict(zip(net.node_ids(), labels))
    traces = {}
    if args.direction in ("worst", "both"):
        traces["worst"] = signiter.iterate_worst(ts)
    if args.direction in ("best", "both"):
        traces["best"] = signiter.iterate_best(ts)
    if args.direction == "both":
        signiter.attractors(ts)  # monotone trajectories must land on the same points
    parts = []
    for name, tr in traces.items():
        x = signiter.attractor_point(ts, tr.fixed_point)
        entry = {
            "sigma": _signs(tr.fixed_point),
            "iterations": tr.iterations,
            "safe_nodes": _ids(sc, sorted(tr.safe_sets[-1])),
            "x": _vec(x),
            "V": _vec(ts.to_original(x)),
        }
        if args.trace:
            entry["chain"] = [
                {"sigma": _signs(s), "safe": _ids(sc, sorted(safe))} for s, safe in zip(tr.sequence, tr.safe_sets)
            ]
        if tr.marginal:
            entry["marginal_nodes"] = _ids(sc, sorted(tr.marginal))
        report[name] = entry
        parts.append(f"sigma_{name[0].upper()} = {entry['sigma']}")
    counts = {k: labels.count(k) for k in (signiter.ALWAYS_POSITIVE, signiter.ALWAYS_NEGATIVE, signiter.UNDETERMINED)}
    parts.append(", ".join(f"{v} {k}" for k, v in counts.items()))
    report["summary"] = "; ".join(parts)
    return report


def cmd_validate(sc: ScenarioFile, args) -> dict:
    net = sc.network
    return {
        "command": "validate",
        "scenario": sc.name,
        "n": net.n,
        "m": net.m,
        "seeds": sc.seeds(),
        "schur_by_column_sums": is_schur_by_column_sums(net.C),
        "positivity_ok": dynamics.check_positivity_condition(net),
        "summary": "valid",
    }


COMMANDS = {
    "simulate": cmd_simulate,
    "equilibria": cmd_equilibria,
    "signiter": cmd_signiter,
    "validate": cmd_validate,
}


# -- rendering ---------------------------------------------------------------


def _render_value(v) -> str:
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list) and all(not isinstance(x, (dict, list)) for x in v):
        return "[" + ", ".join(_render_value(x) for x in v) + "]"
    return str(v)


def render_human(report: dict, indent: str = "") -> str:
    """Plain-text view carrying exactly the numbers of the JSON view."""
    lines = []
    if not indent and "summary" in report:
        lines.append(f"{report['command']} {report['scenario']}: {report['summary']}")
    for k, v in report.items():
        if not indent and k in ("summary", "command", "scenario"):
            continue
        if isinstance(v, dict):
            lines.append(f"{indent}{k}:")
            lines.append(render_human(v, indent + "  "))
        elif isinstance(v, list) and v and isinstance(v[0], dict):
            lines.append(f"{indent}{k}:")
            for item in v:
                body = render_human(item, indent + "    ").splitlines()
                body[0] = indent + "  - " + body[0].lstrip()
                lines.extend(body)
        else:
            lines.append(f"{indent}{k}: {_render_value(v)}")
    return "\n".join(lines)


# -- entry point -------------------------------------------------------------


def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--json", action="store_true", default=d(False), help="machine-readable report")
    p.add_argument("--out", default=d("out"), help="artifact directory (default: ./out)")
    p.add_argument("--seed-override", type=int, default=d(None), metavar="SEED",
                   help="replace scenario seeds (requires --force when the scenario pins seeds)")
    p.add_argument("--force", action="store_true", default=d(False))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cascadenet", description="Cascading-failure analysis for cross-holding networks")
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate the dynamics and export trajectories")
    p.add_argument("scenario")
    p.add_argument("--horizon", type=int, default=None, help="override the scenario horizon")
    p.add_argument("--snapshots", type=lambda s: [int(x) for x in s.split(",") if x.strip()],
                   default=[0, 1, 2, 3], help="comma-separated snapshot times (default 0,1,2,3)")
    p.add_argument("--topology-format", choices=["dot", "json"], default="dot")
    _add_globals(p, suppress=True)

    p = sub.add_parser("equilibria", help="enumerate and classify rest points")
    p.add_argument("scenario")
    p.add_argument("--enumerate", action="store_true", help="list consistent orthant equilibria")
    p.add_argument("--regime", action="store_true", help="existence/uniqueness of the extreme rest points")
    p.add_argument("--certificate", metavar="IDS", help="node ids of the submatrix for the no-all-fail test, or 'all'")
    p.add_argument("--max-n", type=int, default=equilibria.DEFAULT_MAX_N)
    _add_globals(p, suppress=True)

    p = sub.add_parser("signiter", help="worst/best rest points by sign-space iteration")
    p.add_argument("scenario")
    p.add_argument("--direction", choices=["worst", "best", "both"], default="both")
    p.add_argument("--trace", action="store_true", help="print the safe-node chain")
    _add_globals(p, suppress=True)

    p = sub.add_parser("validate", help="parse and validate a scenario")
    p.add_argument("scenario")
    _add_globals(p, suppress=True)
    return parser


def _load(ref: str, args) -> ScenarioFile:
    sc = resolve_scenario_path(ref)
    if args.seed_override is not None:
        if sc.seeds() and not args.force:
            raise CliError(
                f"scenario {sc.name!r} pins seeds {sc.seeds()}; pass --force to override them"
            )
        if sc.seeds():
            print(f"warning: replacing seeds {sc.seeds()} with {args.seed_override}", file=sys.stderr)
            sc = sc.with_seed(args.seed_override)
    return sc


def _run_one(ref: str, args) -> tuple[int, dict | None]:
    try:
        sc = _load(ref, args)
        return 0, COMMANDS[args.command](sc, args)
    except CascadeError as exc:
        print(f"error: {ref}: {exc.__class__.__name__}: {exc}", file=sys.stderr)
        if isinstance(exc, ValidationFailure):
            for v in exc.violations:
                print(f"  - {v}", file=sys.stderr)
        return exc.exit_code, None


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    target = Path(args.scenario)
    refs = sorted(str(p) for p in target.glob("*.scenario")) if target.is_dir() else [args.scenario]
    if not refs:
        print(f"error: no *.scenario files in {target}", file=sys.stderr)
        return 2

    code = 0
    reports = []
    for ref in refs:
        c, report = _run_one(ref, args)
        code = max(code, c)
        if report is not None:
            reports.append(report)
    if args.json:
        doc = reports if target.is_dir() else (reports[0] if reports else None)
        if doc is not None:
            print(json.dumps(doc, indent=1, ensure_ascii=False))
    else:
        for r in reports:
            print(render_human(r))
    return code


if __name__ == "__main__":
    sys.exit(main())
