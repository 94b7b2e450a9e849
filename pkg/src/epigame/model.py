"""Domain types and single-epoch mechanics of the virus spread game.

Population ``N = {1, ..., n}`` sits on a weighted complete graph with
symmetric interaction weights ``g[i][j]`` in [0, 1].  A state is a pair
``(infected set, action profile)`` with actions in [0, 1].

One epoch, given a chosen agent ``v``:

1. ``v`` plays its best response, producing the intermediate state.
2. Every agent ``j`` whose action times exposure *strictly* exceeds its
   immunity ``tau(j)`` joins the infected set.

Exposure of agent ``i`` is the infected share of the interaction mass
reaching it::

    r_i = sum(g[i][j] * a[j] for j in infected, j != i)
        / sum(g[i][j] * a[j] for j in N, j != i)

and 0 when the denominator is 0 (nobody reachable is active).  The best
response has the closed form

* 1 when ``i`` is infected,
* 1 when ``i`` is uninfected and its exposure is 0,
* ``min(1, tau(i) / r_i)`` otherwise,

which maximizes the utility ``u_i = f(a_i) + (1 if i is uninfected and
a_i * r_i <= tau(i) else 0)`` for every admissible strictly increasing
curve ``f: [0,1] -> [0,1]`` with ``f(x) > 0`` for ``x > 0``.  The dynamics
therefore never evaluate ``f``; it only matters for utility reporting.

Note the infection update is applied on *every* epoch, including epochs
whose chosen agent's action does not change.  A state can carry "pending"
infections (some uninfected ``j`` already has ``a_j * r_j > tau(j)``,
typically after a boundary-exact escape followed by growth of the infected
set), and those fire on the next epoch no matter who moves.

Agents are labeled 1..n everywhere in this package; the label-to-storage
shift (agent ``i`` lives at tuple slot ``i-1``) happens only inside the
accessors here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Optional, Sequence

from .numeric import (
    FLOAT,
    MODES,
    RATIONAL,
    Number,
    ValidationError,
    exact_pow,
    format_exact,
    parse_exact,
    parse_number,
)

__all__ = [
    "UtilityCurve",
    "ModelConfig",
    "State",
    "EpochRecord",
    "exposure",
    "utility",
    "best_response",
    "infection_update",
    "epoch_step",
    "ValidationError",
]


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class UtilityCurve:
    """Strictly increasing reward curve on [0, 1], f(x) = x ** exponent."""

    exponent: Fraction

    @staticmethod
    def identity() -> "UtilityCurve":
        return UtilityCurve(Fraction(1))

    @staticmethod
    def square_root() -> "UtilityCurve":
        return UtilityCurve(Fraction(1, 2))

    @staticmethod
    def polynomial(exponent) -> "UtilityCurve":
        e = parse_exact(exponent)
        if e <= 0:
            raise ValidationError("utility curve exponent must be positive")
        return UtilityCurve(e)

    def evaluate(self, x: Number) -> Number:
        if isinstance(x, float):
            return x ** float(self.exponent)
        if self.exponent == 1:
            return x
        return exact_pow(Fraction(x), self.exponent)

    def to_json_dict(self) -> dict:
        if self.exponent == 1:
            return {"kind": "identity"}
        if self.exponent == Fraction(1, 2):
            return {"kind": "square-root"}
        return {"kind": "poly", "exponent": format_exact(self.exponent)}


@dataclass(frozen=True)
class ModelConfig:
    """Validated, immutable parameter set.

    ``weights`` is the full symmetric matrix (diagonal unused, stored as 0).
    ``uniform_weight`` caches the common off-diagonal value when the graph is
    uniform, which unlocks O(1) exposure updates in the hot loops.
    """

    n: int
    weights: tuple
    tau: tuple
    curve: UtilityCurve
    initial_actions: tuple
    initial_infected: frozenset
    arithmetic: str

    # -- construction -------------------------------------------------------

    @staticmethod
    def build(
        n: int,
        a,
        tau,
        g="complete",
        f: Optional[UtilityCurve] = None,
        initial_infected: Sequence[int] = (1,),
        arithmetic: str = RATIONAL,
    ) -> "ModelConfig":
        """Build and validate a config from scalar-or-per-agent parameters."""
        if arithmetic not in MODES:
            raise ValidationError(f"unknown arithmetic mode {arithmetic!r}")
        if not isinstance(n, int) or n < 2:
            raise ValidationError("population size n must be an integer >= 2")

        def vector(value, name, low, high, strict_low=False, strict_high=False):
            if isinstance(value, (list, tuple)):
                if len(value) != n:
                    raise ValidationError(f"{name} must have length n={n}")
                vals = tuple(parse_number(v, arithmetic) for v in value)
            else:
                vals = (parse_number(value, arithmetic),) * n
            for v in vals:
                if v < low or v > high or (strict_low and v == low) or (strict_high and v == high):
                    raise ValidationError(f"{name} entries must lie in the required range")
            return vals

        taus = vector(tau, "tau", 0, 1, strict_low=True, strict_high=True)
        actions = vector(a, "initial actions", 0, 1)

        if g == "complete":
            one = parse_number(1, arithmetic)
            zero = parse_number(0, arithmetic)
            weights = tuple(
                tuple(zero if i == j else one for j in range(n)) for i in range(n)
            )
        else:
            if not isinstance(g, (list, tuple)) or len(g) != n:
                raise ValidationError("g must be 'complete' or an n x n matrix")
            rows = []
            for i, row in enumerate(g):
                if len(row) != n:
                    raise ValidationError("g must be square")
                rows.append(tuple(parse_number(v, arithmetic) for v in row))
            zero = parse_number(0, arithmetic)
            weights = tuple(
                tuple(zero if i == j else rows[i][j] for j in range(n)) for i in range(n)
            )
            for i in range(n):
                for j in range(n):
                    if i == j:
                        continue
                    w = weights[i][j]
                    if w < 0 or w > 1:
                        raise ValidationError("interaction weights must lie in [0, 1]")
                    if w != weights[j][i]:
                        raise ValidationError("interaction matrix must be symmetric")

        infected = frozenset(initial_infected)
        if not infected:
            raise ValidationError("initial infected set must be non-empty")
        if not all(isinstance(i, int) and 1 <= i <= n for i in infected):
            raise ValidationError("initial infected agents must be labels in 1..n")

        return ModelConfig(
            n=n,
            weights=weights,
            tau=taus,
            curve=f or UtilityCurve.identity(),
            initial_actions=actions,
            initial_infected=infected,
            arithmetic=arithmetic,
        )

    @staticmethod
    def from_json_dict(doc: dict) -> "ModelConfig":
        """Ingest the JSON config document.

        Fields: n, a (scalar or array), tau (scalar or array), g ("complete"
        or matrix), f ({"kind": ...}), initial_infected (default [1]),
        arithmetic ("rational" | "float").  Rationals may be "p/q" or decimal
        strings and are parsed exactly.
        """
        if not isinstance(doc, dict):
            raise ValidationError("config document must be a JSON object")
        unknown = set(doc) - {"n", "a", "tau", "g", "f", "initial_infected", "arithmetic"}
        if unknown:
            raise ValidationError(f"unknown config fields: {sorted(unknown)}")
        for field in ("n", "a", "tau"):
            if field not in doc:
                raise ValidationError(f"config is missing required field {field!r}")
        f_doc = doc.get("f", {"kind": "identity"})
        if isinstance(f_doc, str):
            f_doc = {"kind": f_doc}
        kind = f_doc.get("kind", "identity")
        if kind == "identity":
            curve = UtilityCurve.identity()
        elif kind in ("square-root", "sqrt"):
            curve = UtilityCurve.square_root()
        elif kind == "poly":
            curve = UtilityCurve.polynomial(f_doc.get("exponent", 1))
        else:
            raise ValidationError(f"unknown utility curve kind {kind!r}")
        return ModelConfig.build(
            n=doc["n"],
            a=doc["a"],
            tau=doc["tau"],
            g=doc.get("g", "complete"),
            f=curve,
            initial_infected=doc.get("initial_infected", [1]),
            arithmetic=doc.get("arithmetic", RATIONAL),
        )

    @staticmethod
    def from_file(path) -> "ModelConfig":
        with open(path, "r", encoding="utf-8") as fh:
            # parse_float=str keeps decimal literals exact in rational mode
            doc = json.load(fh, parse_float=str)
        return ModelConfig.from_json_dict(doc)

    def to_json_dict(self) -> dict:
        def num(x):
            return format_exact(x) if self.arithmetic == RATIONAL else float(x)

        return {
            "n": self.n,
            "a": [num(x) for x in self.initial_actions],
            "tau": [num(t) for t in self.tau],
            "g": "complete" if self.uniform_weight == 1 else [
                [num(w) for w in row] for row in self.weights
            ],
            "f": self.curve.to_json_dict(),
            "initial_infected": sorted(self.initial_infected),
            "arithmetic": self.arithmetic,
        }

    # -- derived properties --------------------------------------------------

    @property
    def one(self) -> Number:
        return 1.0 if self.arithmetic == FLOAT else Fraction(1)

    @property
    def zero(self) -> Number:
        return 0.0 if self.arithmetic == FLOAT else Fraction(0)

    @cached_property
    def uniform_weight(self) -> Optional[Number]:
        """Common off-diagonal weight, or None when the graph is non-uniform."""
        w = self.weights[0][1]
        for i in range(self.n):
            for j in range(self.n):
                if i != j and self.weights[i][j] != w:
                    return None
        return w

    @cached_property
    def common_tau(self) -> Optional[Number]:
        t = self.tau[0]
        return t if all(x == t for x in self.tau) else None

    def tau_of(self, i: int) -> Number:
        return self.tau[i - 1]

    def weight(self, i: int, j: int) -> Number:
        return self.weights[i - 1][j - 1]

    def initial_state(self) -> "State":
        return State(infected=self.initial_infected, actions=self.initial_actions)

    def validate_agent(self, i) -> None:
        if not isinstance(i, int) or not 1 <= i <= self.n:
            raise ValidationError(f"agent index {i!r} out of range 1..{self.n}")


@dataclass(frozen=True, slots=True)
class State:
    """Process state: infected labels plus the current action profile.

    Rational-mode states are canonical by construction: Fractions normalize
    to lowest terms, so equal states compare and hash equal, and
    ``canonical_bytes`` is byte-identical across equal states.
    """

    infected: frozenset
    actions: tuple

    def action(self, i: int) -> Number:
        return self.actions[i - 1]

    def with_action(self, i: int, value: Number) -> "State":
        acts = list(self.actions)
        acts[i - 1] = value
        return State(infected=self.infected, actions=tuple(acts))

    @property
    def infected_size(self) -> int:
        return len(self.infected)

    def infected_mask(self) -> int:
        mask = 0
        for i in self.infected:
            mask |= 1 << (i - 1)
        return mask

    def canonical_bytes(self) -> bytes:
        acts = ",".join(format_exact(a) for a in self.actions)
        return f"{self.infected_mask()}|{acts}".encode("ascii")

    def to_json_dict(self) -> dict:
        return {
            "infected": sorted(self.infected),
            "infected_mask": self.infected_mask(),
            "actions": [format_exact(a) for a in self.actions],
        }


@dataclass(frozen=True, slots=True)
class EpochRecord:
    """One epoch: who moved, the mid-epoch state, and the resulting state."""

    epoch: int
    chosen: int
    intermediate: State
    next: State
    newly_infected: frozenset

    def to_json_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "chosen": self.chosen,
            "newly_infected": sorted(self.newly_infected),
            "infected": sorted(self.next.infected),
            "actions": [format_exact(a) for a in self.next.actions],
        }


# ---------------------------------------------------------------------------
# Single-epoch mechanics
# ---------------------------------------------------------------------------

def _exposure_terms(i: int, state: State, cfg: ModelConfig):
    """(numerator, denominator) of agent i's exposure, unreduced."""
    row = cfg.weights[i - 1]
    acts = state.actions
    num = den = cfg.zero
    for j in range(1, cfg.n + 1):
        if j == i:
            continue
        mass = row[j - 1] * acts[j - 1]
        den += mass
        if j in state.infected:
            num += mass
    return num, den


def exposure(i: int, state: State, cfg: ModelConfig) -> Number:
    """Viral exposure r_i: infected share of the active interaction mass."""
    cfg.validate_agent(i)
    num, den = _exposure_terms(i, state, cfg)
    if den == 0:
        return cfg.zero
    return num / den


def utility(i: int, state: State, cfg: ModelConfig) -> Number:
    """Curve reward plus the safety bonus of 1 for safe uninfected agents."""
    cfg.validate_agent(i)
    a_i = state.action(i)
    reward = cfg.curve.evaluate(a_i)
    if i not in state.infected and a_i * exposure(i, state, cfg) <= cfg.tau_of(i):
        return cfg.one + reward
    return reward


def best_response(i: int, state: State, cfg: ModelConfig) -> Number:
    """Unique utility-maximizing action; independent of the utility curve."""
    cfg.validate_agent(i)
    if i in state.infected:
        return cfg.one
    r = exposure(i, state, cfg)
    if r == 0:
        return cfg.one
    b = cfg.tau_of(i) / r
    return cfg.one if b >= 1 else b


def infection_update(intermediate: State, cfg: ModelConfig) -> frozenset:
    """Agents newly infected by the mid-epoch state (strict threshold)."""
    newly = []
    w = cfg.uniform_weight
    if w is not None and w > 0:
        # uniform positive weights cancel out of every exposure: two running
        # sums give each uninfected agent's exposure in O(1)
        acts = intermediate.actions
        s_all = sum(acts, cfg.zero)
        s_inf = sum((acts[i - 1] for i in intermediate.infected), cfg.zero)
        for j in range(1, cfg.n + 1):
            if j in intermediate.infected:
                continue
            a_j = acts[j - 1]
            if a_j == 0:
                continue
            den = s_all - a_j
            if den != 0 and a_j * s_inf > cfg.tau_of(j) * den:
                newly.append(j)
        return frozenset(newly)
    for j in range(1, cfg.n + 1):
        if j in intermediate.infected:
            continue
        a_j = intermediate.actions[j - 1]
        if a_j == 0:
            continue
        num, den = _exposure_terms(j, intermediate, cfg)
        # a_j * num/den > tau, cross-multiplied (den >= 0 always)
        if den != 0 and a_j * num > cfg.tau_of(j) * den:
            newly.append(j)
    return frozenset(newly)


def epoch_step(state: State, chosen: int, cfg: ModelConfig, epoch: int = 0) -> EpochRecord:
    """Apply one full epoch: best response of ``chosen``, then infections.

    Pure function of its inputs.  The infection update runs unconditionally,
    even when the chosen agent's action is unchanged.
    """
    cfg.validate_agent(chosen)
    b = best_response(chosen, state, cfg)
    intermediate = state if b == state.action(chosen) else state.with_action(chosen, b)
    newly = infection_update(intermediate, cfg)
    if newly:
        nxt = State(infected=intermediate.infected | newly, actions=intermediate.actions)
    else:
        nxt = intermediate
    return EpochRecord(
        epoch=epoch,
        chosen=chosen,
        intermediate=intermediate,
        next=nxt,
        newly_infected=newly,
    )
