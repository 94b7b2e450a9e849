"""Command-line front end.

Verbs
-----
trace      run an explicit agent sequence, write the trajectory as JSON lines
simulate   seeded Monte Carlo over uniformly random agent choices
enumerate  exact distribution of the process at a reported epoch
theory     closed-form limiting laws for the homogeneous preset
compare    table of enumerated/simulated laws against the catalogue,
           CSV + JSON and optional PNG figures

Exit codes: 0 ok, 1 validation error, 2 horizon exhausted without
absorption, 3 uncovered parameter regime, 4 resource cap exceeded.

All randomness flows from --seed; simulate refuses to run without one.
Identical invocations produce byte-identical JSON/CSV outputs.

Horizon counting: --horizon H reports the state at the start of epoch H,
with the seeded initial state counting as epoch 1 (so H-1 agent moves are
applied).  This matches the published 10-epoch reference table.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import analysis, dynamics, enumeration, theory
from .model import ModelConfig, ValidationError
from .numeric import decimal_str, format_exact

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_HORIZON = 2
EXIT_UNCOVERED = 3
EXIT_RESOURCE = 4


class _Parser(argparse.ArgumentParser):
    # argparse's default exit code 2 collides with the horizon-exhausted code
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


def _add_config_flags(p: _Parser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its fields")
    p.add_argument("--n", type=int, help="population size")
    p.add_argument("--a", help="common initial action (exact string, e.g. 0.35 or 7/20)")
    p.add_argument("--tau", help="common immunity threshold (exact string)")
    p.add_argument("--arithmetic", choices=["rational", "float"], help="number mode")
    p.add_argument(
        "--initial-infected",
        help="comma-separated agent labels, default 1",
    )


def _build_config(args) -> ModelConfig:
    doc = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            doc = json.load(fh, parse_float=str)
        if not isinstance(doc, dict):
            raise ValidationError("config file must hold a JSON object")
    if args.n is not None:
        doc["n"] = args.n
    if args.a is not None:
        doc["a"] = args.a
    if args.tau is not None:
        doc["tau"] = args.tau
    if args.arithmetic is not None:
        doc["arithmetic"] = args.arithmetic
    if getattr(args, "initial_infected", None):
        doc["initial_infected"] = [
            int(x) for x in str(args.initial_infected).split(",") if x.strip()
        ]
    return ModelConfig.from_json_dict(doc)


def _write_json(doc: dict, path) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _homogeneous_params(args):
    if args.n is None or args.a is None or args.tau is None:
        raise ValidationError("this command needs --n, --a and --tau")
    return args.n, args.a, args.tau


# ---------------------------------------------------------------------------
# Verbs
# ---------------------------------------------------------------------------

def cmd_trace(args) -> int:
    cfg = _build_config(args)
    try:
        entries = [int(x) for x in str(args.seq).split(",") if x.strip() != ""] if args.seq else []
    except ValueError:
        raise ValidationError(f"bad --seq {args.seq!r}; expected comma-separated integers")
    seq = dynamics.AgentSequence.explicit(entries)
    traj = dynamics.run_dvsp(cfg, seq, max_epochs=args.max_epochs)
    lines = [json.dumps({"kind": "initial", **cfg.initial_state().to_json_dict()}, sort_keys=True)]
    for rec in traj.records:
        lines.append(json.dumps({"kind": "epoch", **rec.to_json_dict()}, sort_keys=True))
    lines.append(json.dumps({"kind": "summary", **traj.to_json_dict()}, sort_keys=True))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if traj.absorbed:
        print(
            f"absorbed at epoch {traj.absorbed_at} "
            f"({traj.certificate}); infected={sorted(traj.limit.infected)}",
            file=sys.stderr,
        )
        return EXIT_OK
    print(f"not absorbed after {traj.epochs_run} epochs", file=sys.stderr)
    return EXIT_HORIZON


def cmd_simulate(args) -> int:
    if args.seed is None:
        raise ValidationError("simulate requires an explicit --seed (no wall-clock seeding)")
    cfg = _build_config(args)
    law = dynamics.monte_carlo(
        cfg, args.samples, args.seed, max_epochs=args.max_epochs, threads=args.threads
    )
    doc = {
        "kind": "empirical-law",
        "config": cfg.to_json_dict(),
        "seed": args.seed,
        **law.to_json_dict(),
    }
    _write_json(doc, args.out)
    if law.absorbed:
        probs = law.infected_size_probs
        print("size law:", ",".join(decimal_str(p, args.precision) for p in probs))
    if law.non_absorbed:
        print(f"warning: {law.non_absorbed} runs hit the horizon unabsorbed", file=sys.stderr)
    return EXIT_OK


def cmd_enumerate(args) -> int:
    cfg = _build_config(args)
    if args.horizon < 1:
        raise ValidationError("--horizon counts reported epochs and must be >= 1")
    dist = enumeration.enumerate_exact(
        cfg, args.horizon - 1, support_cap=args.support_cap, threads=args.threads
    )
    marginal = enumeration.marginal_infected_size(dist)
    doc = {
        "kind": "state-distribution",
        "config": cfg.to_json_dict(),
        "horizon": args.horizon,
        "transitions": args.horizon - 1,
        "absorbed_mass": format_exact(enumeration.absorbed_mass(dist, cfg)),
        **dist.to_json_dict(include_states=args.full or dist.support_size() <= 4096),
    }
    _write_json(doc, args.out)
    print(",".join(decimal_str(p, args.precision) for p in marginal))
    return EXIT_OK


def cmd_theory(args) -> int:
    n, a, tau = _homogeneous_params(args)
    regime = theory.classify_regime(n, a, tau)
    if regime == theory.Regime.UNCOVERED:
        doc = {
            "kind": "law",
            "n": n,
            "a": format_exact(Fraction(a)),
            "tau": format_exact(Fraction(tau)),
            "regime": regime.value,
            "thresholds": theory.thresholds(n, a, tau).to_json_dict(),
            "size_law": None,
            "action_law": None,
        }
        _write_json(doc, args.out)
        print(
            "uncovered regime: no catalogued law in the band a/(n-1) < tau < 1/(n-1)",
            file=sys.stderr,
        )
        return EXIT_UNCOVERED
    ilaw = theory.infected_law(n, a, tau)
    alaw = theory.action_law(n, a, tau)
    doc = {
        "kind": "law",
        "n": n,
        "a": format_exact(Fraction(a)),
        "tau": format_exact(Fraction(tau)),
        "regime": regime.value,
        "thresholds": ilaw.bounds.to_json_dict(),
        "size_law": [format_exact(p) for p in ilaw.size_law()],
        "infected_atoms": ilaw.to_json_dict()["atoms"],
        "action_law": alaw.to_json_dict()["action_law"],
    }
    _write_json(doc, args.out)
    print("size law:", ",".join(format_exact(p) for p in ilaw.size_law()))
    return EXIT_OK


def cmd_compare(args) -> int:
    if args.n is None:
        raise ValidationError("compare needs --n")
    with open(args.grid, "r", encoding="utf-8") as fh:
        grid_doc = json.load(fh, parse_float=str)
    if isinstance(grid_doc, dict):
        grid_doc = grid_doc.get("rows", [])
    grid = []
    for entry in grid_doc:
        if isinstance(entry, dict):
            grid.append((entry["a"], entry["tau"], int(entry.get("horizon", 10))))
        else:
            a, tau, horizon = entry
            grid.append((a, tau, int(horizon)))
    rows = analysis.build_table(
        n=args.n,
        grid=grid,
        method=args.method,
        samples=args.samples,
        seed=args.seed or 0,
        support_cap=args.support_cap,
        threads=args.threads,
    )
    out_dir = Path(args.out or "compare-out")
    out_dir.mkdir(parents=True, exist_ok=True)
    analysis.rows_to_csv(rows, out_dir / "table.csv", precision=args.precision)
    analysis.render_table_json(rows, out_dir / "table.json", precision=args.precision)
    written = [str(out_dir / "table.csv"), str(out_dir / "table.json")]
    if args.figures:
        series = {}
        if args.tv_horizons:
            horizons = [int(h) for h in args.tv_horizons.split(",")]
            for row in rows:
                if row.theoretical is None or row.error is not None:
                    continue
                label = f"a={row.a}, tau={row.tau}"
                series[label] = analysis.tv_series(
                    args.n, row.a, row.tau, horizons, support_cap=args.support_cap
                )
            if series:
                for label, ser in series.items():
                    safe = label.replace("=", "").replace(", ", "_").replace("/", "-")
                    analysis.series_to_csv(ser, out_dir / f"tv_{safe}.csv")
                    written.append(str(out_dir / f"tv_{safe}.csv"))
        written.extend(analysis.render_figures(rows, out_dir, series_by_label=series or None))
    for path in written:
        print(path)
    bad = [row for row in rows if row.error]
    if bad:
        print(f"warning: {len(bad)} rows hit resource limits", file=sys.stderr)
        return EXIT_RESOURCE
    return EXIT_OK


# ---------------------------------------------------------------------------
# Wiring
# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="epigame", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("trace", help="run an explicit agent sequence", parents=[])
    _add_config_flags(p)
    p.add_argument("--seq", default="", help="comma-separated 1-based agent labels")
    p.add_argument("--max-epochs", type=int, default=None)
    p.add_argument("--out", help="write JSON lines here instead of stdout")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("simulate", help="seeded Monte Carlo sampling")
    _add_config_flags(p)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-epochs", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--precision", type=int, default=3)
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("enumerate", help="exact distribution at a reported epoch")
    _add_config_flags(p)
    p.add_argument("--horizon", type=int, required=True, help="reported epoch (initial state = 1)")
    p.add_argument("--support-cap", type=int, default=enumeration.DEFAULT_SUPPORT_CAP)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--precision", type=int, default=3)
    p.add_argument("--full", action="store_true", help="always include the full state support")
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("theory", help="closed-form limiting laws")
    p.add_argument("--n", type=int)
    p.add_argument("--a")
    p.add_argument("--tau")
    p.add_argument("--out", help="write the JSON law here")
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("compare", help="laws vs enumeration/sampling, as a table")
    p.add_argument("--n", type=int)
    p.add_argument("--grid", required=True, help="JSON grid file: rows of {a, tau, horizon}")
    p.add_argument("--method", choices=["enumerate", "monte_carlo"], default="enumerate")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--support-cap", type=int, default=enumeration.DEFAULT_SUPPORT_CAP)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--precision", type=int, default=3)
    p.add_argument("--figures", action="store_true", help="also render PNG figures")
    p.add_argument("--tv-horizons", default="", help="comma list for convergence series")
    p.add_argument("--out", help="output directory (default compare-out)")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except theory.UncoveredRegimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNCOVERED
    except enumeration.SupportCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
