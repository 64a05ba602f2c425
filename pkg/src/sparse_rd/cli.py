"""``sparse-rd`` command line.

Exit status: 0 on success, 1 for usage or configuration errors, 2 when a
numerical routine fails.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import bounds, freeprob, hypothesis, simulation
from .core import SparseRDError, SparsityConfig, ceil_rate, delta, theta
from .io import (
    ExperimentConfig,
    atomic_write_text,
    csv_text,
    json_text,
    parse_distribution,
    resolve_output_dir,
    write_manifest,
)

FIGURE_HEADERS = {
    1: ("alpha", "universal", "basis_specific"),
    2: ("mu", "lower", "upper"),
    3: ("mu", "lower", "upper"),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory (relative paths resolve under $SPARSE_RD_OUTPUT_ROOT)")
    p.add_argument("--trials", type=int)
    p.add_argument("--json", action="store_true", help="machine-readable output")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sparse-rd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("bounds", help="lower/upper sampling-rate bounds")
    _common(p)
    p.add_argument("--omega", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--distribution")

    p = sub.add_parser("epsilon", help="error probability of the scalar test")
    _common(p)
    p.add_argument("--rho", type=float)
    p.add_argument("--omega", type=float)
    p.add_argument("--distribution")
    p.add_argument("--mc", type=int, default=0, metavar="DRAWS", help="Monte Carlo cross-check")

    p = sub.add_parser("simulate", help="thresholding experiment")
    _common(p)
    p.add_argument("--omega", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--distribution")
    p.add_argument("--basis", dest="basis_kind", choices=("haar", "identity"))
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("spectrum", help="projected random-matrix spectrum vs its limit")
    _common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--rho", type=float)
    p.add_argument("--omega", type=float)

    p = sub.add_parser("figure", help="curve table for figure 1, 2 or 3")
    _common(p)
    p.add_argument("id", type=int, choices=(1, 2, 3))
    p.add_argument("--grid", type=int, help="number of grid points")

    p = sub.add_parser("discrete-demo", help="one-sample recovery of a discrete source")
    _common(p)
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--alphabet", default="-1,1", help="comma-separated symbols; write --alphabet=-1,2 when the first is negative")
    p.add_argument("--basis", dest="basis_kind", choices=("haar", "identity"))
    return parser


def _config(args) -> ExperimentConfig:
    base = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    keys = ("omega", "alpha", "rho", "n", "trials", "seed", "distribution", "basis_kind")
    return base.merged(**{k: getattr(args, k, None) for k in keys}, output_path=args.out)


def _need(cfg, *names):
    missing = [n for n in names if getattr(cfg, n) is None]
    if missing:
        flags = ", ".join("--" + ("basis" if n == "basis_kind" else n) for n in missing)
        raise UsageError(f"missing required setting(s): {flags}")


def _emit(args, payload, lines):
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print("\n".join(lines))


def cmd_bounds(args, cfg):
    _need(cfg, "omega", "alpha", "distribution")
    f = parse_distribution(cfg.distribution)
    om, al = cfg.omega, cfg.alpha
    payload = {
        "omega": om,
        "alpha": al,
        "distribution": f.label,
        "theta": theta(om, f),
        "corollary_holds": bounds.corollary_holds(al, om, f),
        "corollary_threshold": bounds.corollary_threshold(om, al),
        "lower_bound_rate": bounds.lower_bound_rate(al, om, f),
        "upper_bound_rate": bounds.upper_bound_rate(al, om, f),
        "general_universal_rate": bounds.general_source_rate(om, al, True),
        "general_basis_specific_rate": bounds.general_source_rate(om, al, False),
    }
    _emit(args, payload, [f"{k:28s} {v}" for k, v in payload.items()])


def cmd_epsilon(args, cfg):
    _need(cfg, "rho", "omega", "distribution")
    f = parse_distribution(cfg.distribution)
    model = hypothesis.MixtureModel(cfg.rho, cfg.omega, f)
    t_set = hypothesis.optimal_threshold_set(model)
    payload = {
        "rho": cfg.rho,
        "omega": cfg.omega,
        "distribution": f.label,
        "epsilon": hypothesis.epsilon(model, t_set),
        "threshold_set": [list(iv) for iv in t_set.intervals],
    }
    if args.mc:
        _need(cfg, "seed")
        est, se = hypothesis.monte_carlo_error(model, t_set, args.mc, cfg.seed)
        payload.update(monte_carlo=est, monte_carlo_stderr=se)
    _emit(args, payload, [f"{k:20s} {v}" for k, v in payload.items()])


def cmd_simulate(args, cfg):
    _need(cfg, "omega", "alpha", "rho", "n", "distribution", "seed")
    cfg = cfg.merged(trials=cfg.trials or 1, basis_kind=cfg.basis_kind or "haar")
    f = parse_distribution(cfg.distribution)
    result = simulation.run_experiment(
        SparsityConfig(cfg.omega, cfg.n), f, cfg.rho, cfg.alpha, cfg.trials, cfg.seed, cfg.basis_kind,
        workers=args.workers,
    )
    run_id = cfg.run_id("simulate")
    out = resolve_output_dir(cfg.output_path, f"simulate-{run_id}")
    rows = [(t.seed, t.distortion_count, t.normalized_distortion, int(t.exceeded)) for t in result.trials]
    atomic_write_text(out / "trials.csv", csv_text(("seed", "distortion_count", "normalized_distortion", "exceeded"), rows))
    summary = dict(result.summary(), distribution=f.label, seed=cfg.seed, basis_kind=cfg.basis_kind)
    atomic_write_text(out / "summary.json", json_text(summary))
    atomic_write_text(out / "config.txt", cfg.to_text())
    write_manifest(out, run_id, cfg, ["trials.csv", "summary.json", "config.txt"])
    summary["output_dir"] = str(out)
    _emit(args, summary, [f"{k:28s} {v}" for k, v in summary.items()])


def cmd_spectrum(args, cfg):
    _need(cfg, "n", "rho", "omega", "seed")
    n, rho, om = cfg.n, cfg.rho, cfg.omega
    eigs = freeprob.empirical_projected_spectrum(n, rho, om, cfg.seed)
    scaled = eigs / om
    summary = {
        "n": n,
        "m": ceil_rate(rho, n),
        "k": SparsityConfig(om, n).k,
        "rho": rho,
        "omega": om,
        "seed": cfg.seed,
        "geometric_mean_scaled": freeprob.geometric_mean_eigenvalue(scaled),
    }
    run_id = cfg.run_id("spectrum")
    out = resolve_output_dir(cfg.output_path, f"spectrum-{run_id}")
    names = ["eigenvalues.csv", "summary.json", "config.txt"]
    atomic_write_text(out / "eigenvalues.csv", csv_text(("index", "eigenvalue", "scaled"),
                                                        [(i, float(e), float(s)) for i, (e, s) in enumerate(zip(eigs, scaled))]))
    if rho <= om:
        nu = freeprob.limit_pair(rho, om).nu
        ks = freeprob.ks_distance(scaled, nu)
        xs = np.sort(scaled)
        ref = nu.cdf(xs)
        emp = np.arange(1, xs.size + 1) / xs.size
        atomic_write_text(out / "cdf.csv", csv_text(("x", "empirical_cdf", "reference_cdf"),
                                                    [(float(a), float(b), float(c)) for a, b, c in zip(xs, emp, ref)]))
        names.insert(1, "cdf.csv")
        summary.update(ks_statistic=ks, reference="marchenko_pastur", reference_ratio=rho / om,
                       limit_geometric_mean=math.exp(-1) * delta(rho / om))
    else:
        print(f"warning: rho={rho} > omega={om}; {summary['m'] - summary['k']} structural zero eigenvalues, "
              "no reference law reported", file=sys.stderr)
        summary.update(ks_statistic=None, reference=None)
    atomic_write_text(out / "summary.json", json_text(summary))
    atomic_write_text(out / "config.txt", cfg.to_text())
    write_manifest(out, run_id, cfg, names)
    summary["output_dir"] = str(out)
    _emit(args, summary, [f"{k:24s} {v}" for k, v in summary.items()])


def figure_rows(figure_id: int, grid=None) -> list:
    """Rows of the figure table, rates normalized by omega."""
    om = bounds.FIGURE_OMEGA
    pts = bounds.figure_curve(figure_id, om, grid=grid)
    rows = []
    for a, b in zip(pts[::2], pts[1::2]):
        x = a.alpha if figure_id == 1 else a.mu
        rows.append((float(x), a.rho / om, b.rho / om))
    return rows


def cmd_figure(args, cfg):
    fid = args.id
    grid = None
    if args.grid:
        grid = np.linspace(0.0, 1.0, args.grid)
    rows = figure_rows(fid, grid)
    run_id = cfg.run_id(f"figure{fid}")
    out = resolve_output_dir(cfg.output_path, f"figure{fid}-{run_id}")
    name = f"figure{fid}.csv"
    atomic_write_text(out / name, csv_text(FIGURE_HEADERS[fid], rows))
    write_manifest(out, run_id, cfg, [name])
    payload = {"figure": fid, "rows": len(rows), "path": str(out / name)}
    _emit(args, payload, [f"wrote {len(rows)} rows to {out / name}"])


def cmd_discrete_demo(args, cfg):
    _need(cfg, "seed")
    alphabet = [float(v) for v in args.alphabet.split(",")]
    n = cfg.n or args.n
    res = simulation.discrete_demo(n, args.k, alphabet, cfg.trials or 1, cfg.seed, cfg.basis_kind or "haar")
    if args.out:
        out = resolve_output_dir(cfg.output_path, "")
        atomic_write_text(out / "demo.json", json_text(res))
    if args.json:
        print(json_text(res), end="")
        return
    for o in res["outcomes"]:
        print(f"seed={o['seed']} success={o['status'] == 'ok'} status={o['status']} u={o['u']}")
    print(f"successes {res['successes']}/{res['trials']}, multiple matches {res['multiple_matches']}, "
          f"no matches {res['no_matches']}")


COMMANDS = {
    "bounds": cmd_bounds,
    "epsilon": cmd_epsilon,
    "simulate": cmd_simulate,
    "spectrum": cmd_spectrum,
    "figure": cmd_figure,
    "discrete-demo": cmd_discrete_demo,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        COMMANDS[args.command](args, cfg)
    except SparseRDError as exc:
        print(f"sparse-rd: numeric failure: {exc}", file=sys.stderr)
        return 2
    except (UsageError, ValueError, OSError) as exc:
        print(f"sparse-rd: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
