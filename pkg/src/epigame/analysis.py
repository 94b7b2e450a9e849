"""Comparison harness: enumerated or sampled laws versus the catalogue.

Produces the regression table (one row per parameter point, theoretical and
empirical size-law columns plus their total variation distance), CSV/JSON
renderings, horizon series for convergence plots, and optional matplotlib
figures rendered to files next to the delimited output.

Horizon convention for reported epochs: the seeded initial state counts as
epoch 1, so a row with ``horizon=H`` applies ``H-1`` transitions and reports
the state at the start of the H-th epoch.  This is the counting under which
the published 10-epoch reference table reproduces (calibrated on its
(a=0, tau=0.3) row); the enumeration API itself counts plain transitions.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from . import theory
from .dynamics import monte_carlo
from .enumeration import SupportCapExceeded, enumerate_exact, marginal_infected_size
from .model import ModelConfig, ValidationError
from .numeric import decimal_str, format_exact, parse_exact

__all__ = [
    "tv_distance",
    "ComparisonRow",
    "build_table",
    "tv_series",
    "rows_to_csv",
    "rows_to_json_doc",
    "render_figures",
    "classify_action_profile",
]

# re-exported: the classifier logically belongs to the reporting surface
classify_action_profile = theory.classify_action_profile


def tv_distance(p: Sequence, q: Sequence, tolerance=Fraction(1, 10**9)):
    """Total variation distance between two probability vectors: half-L1."""
    if len(p) != len(q):
        raise ValidationError(f"length mismatch: {len(p)} vs {len(q)}")
    for name, vec in (("p", p), ("q", q)):
        total = sum(vec)
        if abs(total - 1) > tolerance:
            raise ValidationError(f"vector {name} sums to {total}, not 1")
    diff = sum(abs(x - y) for x, y in zip(p, q))
    return diff / 2


def _chi_square(observed_counts: Sequence[int], expected_probs: Sequence, samples: int):
    """Pearson statistic over bins with nonzero expectation, plus dof."""
    stat = 0.0
    dof = -1
    for obs, prob in zip(observed_counts, expected_probs):
        if prob == 0:
            continue
        exp = float(prob) * samples
        stat += (obs - exp) ** 2 / exp
        dof += 1
    return stat, max(dof, 0)


@dataclass
class ComparisonRow:
    n: int
    a: str
    tau: str
    horizon: int
    method: str  # "enumerate" | "monte_carlo"
    regime: str
    theoretical: Optional[tuple]  # size-law Fractions, None when uncovered
    empirical: Optional[tuple]
    tv: Optional[Fraction]
    chi_square: Optional[float] = None
    chi_square_dof: Optional[int] = None
    samples: Optional[int] = None
    error: Optional[str] = None

    def to_json_dict(self, precision: int = 3) -> dict:
        def law(vec):
            if vec is None:
                return None
            return {
                "exact": [format_exact(x) for x in vec],
                "decimal": [decimal_str(x, precision) for x in vec],
            }

        return {
            "n": self.n,
            "a": self.a,
            "tau": self.tau,
            "horizon": self.horizon,
            "method": self.method,
            "regime": self.regime,
            "theoretical": law(self.theoretical),
            "empirical": law(self.empirical),
            "tv_distance": format_exact(self.tv) if self.tv is not None else None,
            "tv_distance_decimal": decimal_str(self.tv, 6) if self.tv is not None else None,
            "chi_square": self.chi_square,
            "chi_square_dof": self.chi_square_dof,
            "samples": self.samples,
            "error": self.error,
        }


def _theory_column(n, a, tau):
    regime = theory.classify_regime(n, a, tau)
    if regime == theory.Regime.UNCOVERED:
        return regime.value, None
    return regime.value, theory.infected_law(n, a, tau).size_law()


def build_table(
    n: int,
    grid: Sequence,
    method: str = "enumerate",
    samples: int = 10_000,
    seed: int = 0,
    max_epochs: Optional[int] = None,
    support_cap: int = 1_000_000,
    threads: int = 1,
) -> list:
    """One ComparisonRow per (a, tau, horizon) grid point.

    ``horizon`` follows the reported-epoch convention (see module
    docstring); it is ignored by the monte_carlo method, which runs to the
    limit.  Enumeration resource errors are recorded on their row and do not
    abort the rest of the table.
    """
    if method not in ("enumerate", "monte_carlo"):
        raise ValidationError(f"unknown method {method!r}")
    rows = []
    for point in grid:
        a, tau, horizon = point
        horizon = int(horizon)
        if horizon < 1:
            raise ValidationError("horizon must be >= 1 (reported-epoch convention)")
        a_s = format_exact(parse_exact(a))
        tau_s = format_exact(parse_exact(tau))
        regime, law = _theory_column(n, a_s, tau_s)
        row = ComparisonRow(
            n=n,
            a=a_s,
            tau=tau_s,
            horizon=horizon,
            method=method,
            regime=regime,
            theoretical=law,
            empirical=None,
            tv=None,
        )
        try:
            cfg = ModelConfig.build(n=n, a=a_s, tau=tau_s)
            if method == "enumerate":
                dist = enumerate_exact(
                    cfg, horizon - 1, support_cap=support_cap, threads=threads
                )
                row.empirical = marginal_infected_size(dist)
            else:
                cfg_f = ModelConfig.build(n=n, a=a_s, tau=tau_s, arithmetic="float")
                law_mc = monte_carlo(cfg_f, samples, seed, max_epochs, threads=threads)
                row.samples = law_mc.samples
                row.empirical = law_mc.infected_size_probs
                if row.theoretical is not None:
                    row.chi_square, row.chi_square_dof = _chi_square(
                        law_mc.infected_size_counts, row.theoretical, law_mc.absorbed
                    )
        except SupportCapExceeded as exc:
            row.error = str(exc)
        if row.empirical is not None and row.theoretical is not None:
            row.tv = tv_distance(row.theoretical, row.empirical)
        rows.append(row)
    return rows


def tv_series(n: int, a, tau, horizons: Sequence[int], support_cap: int = 1_000_000):
    """(horizon, tv) pairs for the convergence of enumeration to the law.

    Horizons use the reported-epoch convention.  Incremental: the
    distribution is advanced once and measured at each requested horizon.
    """
    from .enumeration import advance, StateDistribution

    a_s = format_exact(parse_exact(a))
    tau_s = format_exact(parse_exact(tau))
    regime, law = _theory_column(n, a_s, tau_s)
    if law is None:
        raise theory.UncoveredRegimeError(f"no catalogued law at a={a_s}, tau={tau_s}")
    cfg = ModelConfig.build(n=n, a=a_s, tau=tau_s)
    horizons = sorted(set(int(h) for h in horizons))
    if horizons and horizons[0] < 1:
        raise ValidationError("horizons must be >= 1")
    dist = StateDistribution(probs={cfg.initial_state(): Fraction(1)}, epoch=0)
    out = []
    reached = 0
    for h in horizons:
        while reached < h - 1:
            dist = advance(dist, cfg)
            reached += 1
            if dist.support_size() > support_cap:
                raise SupportCapExceeded(
                    f"support reached {dist.support_size()} states at epoch "
                    f"{reached}, above the cap of {support_cap}"
                )
        out.append((h, tv_distance(law, marginal_infected_size(dist))))
    return out


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

_CSV_FIELDS = [
    "n",
    "a",
    "tau",
    "horizon",
    "method",
    "regime",
    "theoretical_exact",
    "theoretical_decimal",
    "empirical_exact",
    "empirical_decimal",
    "tv_distance",
    "chi_square",
    "chi_square_dof",
    "samples",
    "error",
]


def rows_to_csv(rows, path, precision: int = 3) -> None:
    """One ComparisonRow per line; laws render as ;-joined p/q and decimals."""

    def vec_exact(vec):
        return ";".join(format_exact(x) for x in vec) if vec is not None else "uncovered"

    def vec_dec(vec):
        return ";".join(decimal_str(x, precision) for x in vec) if vec is not None else "uncovered"

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=_CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(
                {
                    "n": row.n,
                    "a": row.a,
                    "tau": row.tau,
                    "horizon": row.horizon,
                    "method": row.method,
                    "regime": row.regime,
                    "theoretical_exact": vec_exact(row.theoretical),
                    "theoretical_decimal": vec_dec(row.theoretical),
                    "empirical_exact": vec_exact(row.empirical) if row.error is None else "error",
                    "empirical_decimal": vec_dec(row.empirical) if row.error is None else "error",
                    "tv_distance": decimal_str(row.tv, 6) if row.tv is not None else "",
                    "chi_square": f"{row.chi_square:.4f}" if row.chi_square is not None else "",
                    "chi_square_dof": row.chi_square_dof if row.chi_square_dof is not None else "",
                    "samples": row.samples if row.samples is not None else "",
                    "error": row.error or "",
                }
            )


def rows_to_json_doc(rows, precision: int = 3) -> dict:
    return {
        "kind": "comparison-table",
        "rows": [row.to_json_dict(precision) for row in rows],
    }


def series_to_csv(series, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["horizon", "tv_distance"])
        for h, tv in series:
            writer.writerow([h, decimal_str(tv, 9)])


def render_figures(rows, out_dir, series_by_label=None) -> list:
    """Render comparison bar charts (and optional TV series) as PNG files.

    Returns the list of written paths.  Uses the Agg backend; files land
    next to the delimited output.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from pathlib import Path

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    plottable = [r for r in rows if r.empirical is not None]
    if plottable:
        fig, axes = plt.subplots(
            len(plottable), 1, figsize=(6.0, 1.9 * len(plottable)), squeeze=False
        )
        for ax, row in zip(axes[:, 0], plottable):
            sizes = list(range(1, row.n + 1))
            width = 0.38
            emp = [float(x) for x in row.empirical]
            ax.bar([s - width / 2 for s in sizes], emp, width=width, label="empirical")
            if row.theoretical is not None:
                thr = [float(x) for x in row.theoretical]
                ax.bar([s + width / 2 for s in sizes], thr, width=width, label="limit law")
            ax.set_xticks(sizes)
            ax.set_ylim(0, 1)
            ax.set_ylabel("probability")
            title = f"a={row.a}, tau={row.tau}, horizon={row.horizon} ({row.regime})"
            if row.tv is not None:
                title += f", tv={decimal_str(row.tv, 4)}"
            ax.set_title(title, fontsize=9)
            ax.legend(fontsize=7)
        axes[-1, 0].set_xlabel("size of the limiting infected set")
        fig.tight_layout()
        path = out_dir / "size_laws.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(str(path))

    if series_by_label:
        fig, ax = plt.subplots(figsize=(6.0, 3.4))
        for label, series in series_by_label.items():
            ax.plot([h for h, _ in series], [float(tv) for _, tv in series], marker="o", label=label)
        ax.set_xlabel("reported epoch")
        ax.set_ylabel("total variation to the limit law")
        ax.set_yscale("log")
        ax.legend(fontsize=7)
        fig.tight_layout()
        path = out_dir / "tv_convergence.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(str(path))
    return written


def render_table_json(rows, path, precision: int = 3) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(rows_to_json_doc(rows, precision), fh, indent=2, sort_keys=True)
        fh.write("\n")
