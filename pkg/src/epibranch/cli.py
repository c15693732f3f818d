"""Command line entry point.

One subcommand per diagnostic; every run echoes its resolved
configuration, prints one line per verdict, and (with --out) writes the
report as CSV and JSON.  Runs with the same configuration and seed emit
byte-identical files.
"""

from __future__ import annotations

import argparse
import sys

from .config import Option, resolve
from .errors import ConfigError
from .exact_moments import cumulant_recursion, pairing_function, second_moment
from .experiments import (
    DiagnosticReport,
    converge_run,
    importance_diagnostic,
    mean_check,
    occupation_time_stat,
    threshold_sweep,
)
from .fields import LatticeField, build_family
from .kernel_bounds import BoundScan, default_scan, verify_bounds
from .lattice_kernel import WalkSpec, build_kernel_table, verify_table_invariants
from .offspring import custom_law, poisson_unit

__all__ = ["main"]


def _ints(raw: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in raw.replace(",", " ").split())


def _floats(raw: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in raw.replace(",", " ").split())


def _site(raw: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in raw.replace(",", " ").split())


# -- subcommand handlers ---------------------------------------------------


def _cmd_kernel(cfg, args) -> DiagnosticReport:
    spec = WalkSpec(cfg["d"])
    check = verify_table_invariants(
        spec, cfg["n_max"],
        mass_tol=cfg["mass_tol"], ck_tol=cfg["ck_tol"],
    )
    ok = check.passed
    rows = [
        ["mass_error_max", check.mass_error_max, cfg["mass_tol"]],
        ["chapman_kolmogorov_error_max", check.chapman_kolmogorov_error_max, cfg["ck_tol"]],
        ["symmetry_exact", float(check.symmetry_exact), 1.0],
        ["support_ok", float(check.support_ok), 1.0],
        ["boundary_exact", float(check.boundary_exact), 1.0],
        ["checks", float(check.checks), float("nan")],
    ]
    return DiagnosticReport(
        name=f"kernel_d{cfg['d']}", d=cfg["d"], seed=args.seed, config=cfg,
        columns=["check", "value", "tolerance"], rows=rows,
        verdicts={"invariants": "pass" if ok else "fail"},
        notes=[f"streamed steps 0..{cfg['n_max']}"],
    )


def _cmd_brw(cfg, args) -> DiagnosticReport:
    return mean_check(
        cfg["d"], cfg["horizon"], cfg["reps"], args.seed,
        workers=args.workers,
    )


def _cmd_sir(cfg, args) -> DiagnosticReport:
    return threshold_sweep(
        village_sizes=(cfg["village_size"],),
        exponents=(cfg["alpha"],),
        probe_times=_floats(cfg["probe_times"]),
        reps=cfg["reps"],
        master_seed=args.seed,
        d=cfg["d"],
        seed_factor=cfg["seed_factor"],
        workers=args.workers,
    )


def _cmd_exact(cfg, args) -> DiagnosticReport:
    d = cfg["d"]
    law = (
        poisson_unit(d)
        if cfg["law"] == "poisson"
        else custom_law(d, _floats(cfg["law"]))
    )
    if cfg["mode"] == "second_moment":
        table = build_kernel_table(WalkSpec(d), cfg["n"])
        rows = [
            ["second_moment", i, second_moment(law, table, _site(cfg["x"]), i)]
            for i in range(1, cfg["n"] + 1)
        ]
        return DiagnosticReport(
            name=f"exact_d{d}", d=d, seed=args.seed, config=cfg,
            columns=["quantity", "steps", "value"], rows=rows,
            verdicts={}, notes=[f"probe site {cfg['x']}"],
        )
    if cfg["mode"] != "cumulants":
        raise ConfigError(f"mode must be cumulants or second_moment, got {cfg['mode']!r}")
    psi = pairing_function(d, {_site(cfg["x"]): cfg["weight"]})
    table = cumulant_recursion(
        law, psi, cfg["n"], cfg["h_max"], convention=cfg["convention"],
    )
    rows = [
        ["kappa_origin", h, i, table.kappa(h, i).at((0,) * d)]
        for h in range(1, cfg["h_max"] + 1)
        for i in range(cfg["n"] + 1)
    ]
    return DiagnosticReport(
        name=f"exact_d{d}", d=d, seed=args.seed, config=cfg,
        columns=["quantity", "order", "steps", "value"], rows=rows,
        verdicts={}, notes=[f"pairing weight {cfg['weight']} at {cfg['x']}"],
    )


def _cmd_lr(cfg, args) -> DiagnosticReport:
    return importance_diagnostic(
        village_sizes=_ints(cfg["village_sizes"]),
        mu_count=cfg["mu_count"],
        horizon=cfg["horizon"],
        reps=cfg["reps"],
        master_seed=args.seed,
        d=cfg["d"],
        alpha=cfg["alpha"],
    )


def _cmd_converge(cfg, args) -> DiagnosticReport:
    return converge_run(
        cfg["d"],
        ks=_ints(cfg["ks"]),
        t_values=_floats(cfg["t_values"]),
        reps=cfg["reps"],
        master_seed=args.seed,
        workers=args.workers,
        kernel_cache=args.kernel_cache,
        variance_oracle=cfg["variance_oracle"],
    )


def _cmd_threshold(cfg, args) -> DiagnosticReport:
    exponents = _floats(cfg["exponents"]) if cfg["exponents"] else None
    return threshold_sweep(
        village_sizes=_ints(cfg["village_sizes"]),
        exponents=exponents,
        probe_times=_floats(cfg["probe_times"]),
        reps=cfg["reps"],
        master_seed=args.seed,
        d=cfg["d"],
        seed_factor=cfg["seed_factor"],
        workers=args.workers,
    )


def _cmd_occupation(cfg, args) -> DiagnosticReport:
    return occupation_time_stat(
        ks=_ints(cfg["ks"]),
        reps_per_k=_ints(cfg["reps_per_k"]),
        master_seed=args.seed,
        family=build_family(cfg["family"]),
        workers=args.workers,
    )


def _cmd_bounds(cfg, args) -> DiagnosticReport:
    d = cfg["d"]
    base = default_scan(d)
    scan = BoundScan(
        beta=cfg["beta"], gamma=cfg["gamma"], pair_offsets=base.pair_offsets,
    )
    table = build_kernel_table(
        WalkSpec(d), cfg["n_max"], cache_path=args.kernel_cache,
    )
    suite = cfg["suite"] if cfg["suite"] == "all" else cfg["suite"].split()
    reports = verify_bounds(table, suite, scan)
    rows = [
        [r.inequality, r.constant if r.constant is not None else float("nan"),
         r.points, "true" if r.passed else "false"]
        for r in reports
    ]
    verdicts = {"scan_passed": "pass" if all(r.passed for r in reports) else "fail"}
    return DiagnosticReport(
        name=f"bounds_d{d}", d=d, seed=args.seed, config=cfg,
        columns=["inequality", "constant", "points", "passed"], rows=rows,
        verdicts=verdicts,
        notes=[r.as_json() for r in reports],
    )


_COMMANDS = {
    "kernel": (
        "verify step-kernel conservation laws",
        [
            Option("d", int, 2, "lattice dimension"),
            Option("n_max", int, 200, "largest step to stream"),
            Option("mass_tol", float, 1e-12, "mass conservation tolerance"),
            Option("ck_tol", float, 1e-10, "composition spot-check tolerance"),
        ],
        _cmd_kernel,
    ),
    "brw": (
        "simulated generation/occupation means vs exact kernel sums",
        [
            Option("d", int, 2, "lattice dimension"),
            Option("horizon", int, 20, "generations to simulate"),
            Option("reps", int, 100_000, "replicates"),
        ],
        _cmd_brw,
    ),
    "sir": (
        "coupled envelope/epidemic diagnostic at one (alpha, N) cell",
        [
            Option("d", int, 2, "lattice dimension"),
            Option("village_size", int, 1_000, "village size N"),
            Option("alpha", float, 0.5, "seeding exponent"),
            Option("probe_times", str, "0.25 0.5", "rescaled probe times"),
            Option("reps", int, 200, "replicates"),
            Option("seed_factor", float, 4.0, "initial cases per N^alpha"),
        ],
        _cmd_sir,
    ),
    "exact": (
        "exact cumulant or second-moment tables",
        [
            Option("d", int, 2, "lattice dimension"),
            Option("mode", str, "cumulants", "cumulants or second_moment"),
            Option("law", str, "poisson", "poisson or space-separated probabilities"),
            Option("n", int, 8, "steps"),
            Option("h_max", int, 3, "highest cumulant order"),
            Option("convention", str, "gen_1_to_n", "generation-window convention"),
            Option("x", str, "0 0", "probe site"),
            Option("weight", float, 1.0, "pairing weight at the probe site"),
        ],
        _cmd_exact,
    ),
    "lr": (
        "likelihood-ratio importance-sampling consistency battery",
        [
            Option("d", int, 2, "lattice dimension"),
            Option("village_sizes", str, "5 10 50", "village sizes"),
            Option("mu_count", int, 3, "initial cases at the origin"),
            Option("horizon", int, 5, "epidemic steps"),
            Option("reps", int, 10_000, "replicates per side"),
            Option("alpha", float, 0.5, "expansion exponent"),
        ],
        _cmd_lr,
    ),
    "converge": (
        "rescaled occupation fluctuations along a scale ladder",
        [
            Option("d", int, 2, "lattice dimension"),
            Option("ks", str, "16 64 256", "scale ladder"),
            Option("t_values", str, "0.5 1.0", "rescaled probe times"),
            Option("reps", int, 10_000, "replicates per scale"),
            Option("variance_oracle", bool, True, "check the pinned variance cell"),
        ],
        _cmd_converge,
    ),
    "threshold": (
        "suppression and coupling quality across (alpha, N)",
        [
            Option("d", int, 2, "lattice dimension"),
            Option("village_sizes", str, "1000 10000 100000", "village ladder"),
            Option("exponents", str, "", "alpha ladder (empty: alpha*/2 and alpha*)"),
            Option("probe_times", str, "0.25 0.5", "rescaled probe times"),
            Option("reps", int, 1_000, "replicates per cell"),
            Option("seed_factor", float, 4.0, "initial cases per N^alpha"),
        ],
        _cmd_threshold,
    ),
    "occupation": (
        "origin occupation rate decay along a scale ladder",
        [
            Option("ks", str, "64 256 1024", "scale ladder"),
            Option("reps_per_k", str, "4000 2000 800", "replicates per scale"),
            Option("family", str, "point_spread", "planar initial family kind"),
        ],
        _cmd_occupation,
    ),
    "bounds": (
        "kernel-domination inequality scans",
        [
            Option("d", int, 2, "lattice dimension"),
            Option("n_max", int, 401, "kernel table horizon"),
            Option("beta", float, 0.4, "Gaussian comparison exponent"),
            Option("gamma", float, 0.25, "Hoelder weight exponent"),
            Option("suite", str, "all", "inequality ids (space separated) or all"),
        ],
        _cmd_bounds,
    ),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epibranch",
        description="Branching-walk and lattice-epidemic diagnostics.",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for name, (help_text, options, _) in _COMMANDS.items():
        sub = subs.add_parser(name, help=help_text)
        sub.add_argument("--config", default=None, help="key=value config file")
        sub.add_argument("--seed", type=int, default=0, help="master seed")
        sub.add_argument("--out", default=None, help="directory for CSV/JSON reports")
        sub.add_argument("--workers", type=int, default=1, help="worker processes")
        sub.add_argument(
            "--kernel-cache", dest="kernel_cache", default=None,
            help="kernel table file (bounds) or green checkpoint directory (converge)",
        )
        sub.add_argument(
            "overrides", nargs="*", metavar="KEY=VALUE",
            help="config overrides, e.g. reps=500",
        )
        keys = ", ".join(f"{o.name}={o.default}" for o in options)
        sub.description = f"{help_text}. Keys: {keys}"
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    help_text, options, handler = _COMMANDS[args.command]
    try:
        text = None
        if args.config is not None:
            with open(args.config) as fh:
                text = fh.read()
        cfg = resolve(options, text=text, overrides=args.overrides)
        report = handler(cfg, args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(report.summary())
    if args.out is not None:
        csv_path, json_path = report.write(args.out)
        print(f"wrote {csv_path}")
        print(f"wrote {json_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
