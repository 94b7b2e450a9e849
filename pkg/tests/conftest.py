"""Shared fixtures: reference grids and cached exact enumerations."""

import json
from fractions import Fraction

import pytest

from epigame.enumeration import enumerate_exact
from epigame.model import ModelConfig

# The published 10-epoch reference table's full (a, tau) grid at n = 5.
# Entries in the uncovered band a/(n-1) < tau < 1/(n-1) are marked; they
# still enumerate fine, there is just no catalogued law for them.
TABLE1_GRID = [
    ("0", "0.12"), ("0", "0.3"), ("0", "0.4"), ("0", "0.6"),
    ("0.2", "0.02"), ("0.2", "0.05"), ("0.2", "0.15"), ("0.2", "0.3"),
    ("0.2", "0.35"), ("0.2", "0.5"), ("0.2", "0.7"),
    ("0.35", "0.05"), ("0.35", "0.0875"), ("0.35", "0.15"), ("0.35", "0.255"),
    ("0.35", "0.27"), ("0.35", "0.3"), ("0.35", "0.36"), ("0.35", "0.4"), ("0.35", "0.5"),
    ("0.45", "0.1"), ("0.45", "0.1125"), ("0.45", "0.15"), ("0.45", "0.27"),
    ("0.45", "0.3"), ("0.45", "0.32"), ("0.45", "0.4"), ("0.45", "0.5"),
    ("0.6", "0.1"), ("0.6", "0.15"), ("0.6", "0.2"), ("0.6", "0.26"),
    ("0.6", "0.3"), ("0.6", "0.34"), ("0.6", "0.4"),
    ("0.8", "0.1"), ("0.8", "0.2"), ("0.8", "0.22"), ("0.8", "0.26"),
    ("0.8", "0.27"), ("0.8", "0.28"),
    ("1", "0.12"), ("1", "0.5"),
]

# Reference-table rows pinned by the regression gate: printed empirical
# size-law columns at the table's 10-epoch count (9 transitions).
PINNED_ROWS = [
    ("0", "0.12", ("0.3340", "0.2", "0.199", "0.181", "0.085")),
    ("0", "0.3", ("0.42", "0.2", "0.199", "0.181", "0")),
    ("0", "0.6", ("0.8", "0.2", "0", "0", "0")),
    ("0.2", "0.02", ("0", "0", "0", "0.16", "0.84")),
    ("0.2", "0.05", ("0", "0", "0", "0", "1")),
    ("1", "0.12", ("0", "0", "0", "0.16", "0.84")),
    ("1", "0.5", ("1", "0", "0", "0", "0")),
]

# The process provably sits still until agent 1 first moves when
# tau = a/(n-1), so the probability of the seed state after 9 transitions is
# (4/5)^9 ~ 0.134 and no finite horizon can reproduce the printed column for
# that row, which is the limit law.  See notes in the README.
UNREACHABLE_PINNED = {("0.2", "0.05")}

TABLE_TRANSITIONS = 9  # the published "10 epochs" count the seed state as epoch 1


@pytest.fixture(scope="session")
def table1_dists():
    """Exact distributions after 9 transitions for every reference row."""
    out = {}
    for a, tau in TABLE1_GRID:
        cfg = ModelConfig.build(n=5, a=a, tau=tau)
        out[(a, tau)] = enumerate_exact(cfg, TABLE_TRANSITIONS)
    return out


@pytest.fixture()
def write_grid_file(tmp_path):
    def _write(rows):
        path = tmp_path / "grid.json"
        path.write_text(json.dumps({"rows": rows}), encoding="utf-8")
        return str(path)

    return _write


def as_fractions(strings):
    return tuple(Fraction(s) for s in strings)
