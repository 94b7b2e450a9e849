"""Closed-form limiting laws of the process in the homogeneous setting.

Everything here assumes the symmetric preset: one common initial action
``a``, one common immunity ``tau``, uniform interaction weights, and patient
zero = agent 1.  Laws are evaluated exactly over rationals.

The catalogue of parameter regimes, keyed by how the population starts out:

==================  ============================================  =========
regime              hypothesis                                    thresholds
==================  ============================================  =========
zero_start          a = 0 (any tau)                               alpha, beta
full_start          a = 1 (any tau)                               --
cautious_start      0 < a <= tau,  tau >= 1/(n-1)                 hat variants
bold_start          1/(n-1) <= tau < a < 1                        tilde/bar
low_immunity        tau <= a/(n-1),  tau < a < 1                  --
uncovered           a/(n-1) < tau < 1/(n-1) with 0 < a < 1        --
==================  ============================================  =========

Threshold family (exact ceilings/floors on rationals)::

    alpha       = min(ceil(1/tau), n)
    beta        = min(floor((n-1) tau) + 1, alpha + 1)
    hat_alpha   = max(1, ceil((1/tau - (n-1) a) / (1 - a)))
    hat_beta    = min(floor((n-1) tau) + 1, hat_alpha + 1)
    tilde_alpha = max(1, ceil((1 - (n-1) a tau) / (tau (1 - a))))
    bar_alpha   = floor((n-1) a tau / (a - tau (1 - a))) + 1
    tilde_beta  = min(floor((n-1) tau) + 1, tilde_alpha + 1)
    bar_beta    = min(floor((n-1) tau) + 1, bar_alpha)

The bold_start laws split on ``tilde_alpha + 1 <= bar_alpha``; the other
branch carries the correction mass::

    eta = (n-1)!/n^3 * sum_{w=bar_alpha-1}^{tilde_alpha-1}
             1/(n-w-2)! * sum_{t>w} S(t-1, w) / n^(t-1)

with S the Stirling numbers of the second kind.  The inner series has the
closed form ``(1/n)^w / prod_{k=1..w} (1 - k/n)``, which this module uses as
the primary evaluation, self-checked against a truncated direct sum.

Known limitations (verified against this package's exact enumerator and
exact-arithmetic simulation, see tests; this module evaluates the catalogued
formulas as published):

* In the bold_start eta branch with ``tilde_alpha = n - 1``, the catalogued
  size-(n-1) mass understates the true limit by ``(n-1)/n^3``.  The gap
  traces to the last never-moved agent, whose exposure is exactly 1 when it
  first moves, parking its action exactly on ``tau`` so that it can never be
  infected afterwards regardless of who moves next.
* At ``n = 2`` the full_start and low_immunity laws assume the surviving
  agent's first move lands strictly above ``tau``; with a single opponent it
  lands exactly on ``tau`` and the boundary spares that agent forever, so
  the true law is (1/2, 1/2) where the catalogue says (1/4, 3/4).  From
  ``n = 3`` up the catalogue matches exact enumeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Optional

from .numeric import ValidationError, exact_ceil, exact_floor, format_exact, parse_exact

__all__ = [
    "Regime",
    "RegimeThresholds",
    "UncoveredRegimeError",
    "thresholds",
    "stirling2",
    "eta",
    "eta_series",
    "classify_regime",
    "predict_action_limit",
    "ActionProfileClass",
    "Law",
    "infected_law",
    "action_law",
    "classify_action_profile",
]


class UncoveredRegimeError(ValueError):
    """No closed-form law is catalogued for these parameters."""


class Regime(str, Enum):
    ZERO_START = "zero_start"
    FULL_START = "full_start"
    CAUTIOUS_START = "cautious_start"
    BOLD_START = "bold_start"
    LOW_IMMUNITY = "low_immunity"
    UNCOVERED = "uncovered"


@dataclass(frozen=True)
class RegimeThresholds:
    """Integer cutoffs; a field is None when its regime does not apply."""

    alpha: int
    beta: int
    hat_alpha: Optional[int] = None
    hat_beta: Optional[int] = None
    tilde_alpha: Optional[int] = None
    bar_alpha: Optional[int] = None
    tilde_beta: Optional[int] = None
    bar_beta: Optional[int] = None

    def to_json_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "hat_alpha": self.hat_alpha,
            "hat_beta": self.hat_beta,
            "tilde_alpha": self.tilde_alpha,
            "bar_alpha": self.bar_alpha,
            "tilde_beta": self.tilde_beta,
            "bar_beta": self.bar_beta,
        }


def _check_params(n: int, a, tau) -> tuple[Fraction, Fraction]:
    if not isinstance(n, int) or n < 2:
        raise ValidationError("n must be an integer >= 2")
    a = parse_exact(a)
    tau = parse_exact(tau)
    if not 0 <= a <= 1:
        raise ValidationError("a must lie in [0, 1]")
    if not 0 < tau < 1:
        raise ValidationError("tau must lie strictly inside (0, 1)")
    return a, tau


def thresholds(n: int, a, tau) -> RegimeThresholds:
    a, tau = _check_params(n, a, tau)
    cap = exact_floor((n - 1) * tau) + 1
    alpha = min(exact_ceil(1 / tau), n)
    beta = min(cap, alpha + 1)
    hat_alpha = hat_beta = tilde_alpha = bar_alpha = tilde_beta = bar_beta = None
    if 0 < a < 1:
        if a <= tau:
            hat_alpha = max(1, exact_ceil((1 / tau - (n - 1) * a) / (1 - a)))
            hat_beta = min(cap, hat_alpha + 1)
        else:
            tilde_alpha = max(1, exact_ceil((1 - (n - 1) * a * tau) / (tau * (1 - a))))
            tilde_beta = min(cap, tilde_alpha + 1)
            denom = a - tau * (1 - a)
            if denom > 0:
                bar_alpha = exact_floor((n - 1) * a * tau / denom) + 1
                bar_beta = min(cap, bar_alpha)
    return RegimeThresholds(
        alpha=alpha,
        beta=beta,
        hat_alpha=hat_alpha,
        hat_beta=hat_beta,
        tilde_alpha=tilde_alpha,
        bar_alpha=bar_alpha,
        tilde_beta=tilde_beta,
        bar_beta=bar_beta,
    )


def classify_regime(n: int, a, tau) -> Regime:
    """Total dispatcher over the homogeneous parameter square."""
    a, tau = _check_params(n, a, tau)
    if a == 0:
        return Regime.ZERO_START
    if a == 1:
        return Regime.FULL_START
    inv = Fraction(1, n - 1)
    if tau >= inv:
        return Regime.CAUTIOUS_START if a <= tau else Regime.BOLD_START
    if tau < a and tau * (n - 1) <= a:
        return Regime.LOW_IMMUNITY
    return Regime.UNCOVERED


# ---------------------------------------------------------------------------
# Stirling machinery
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def stirling2(p: int, q: int) -> int:
    """Stirling number of the second kind S(p, q)."""
    if p < 0 or q < 0:
        raise ValidationError("stirling2 arguments must be non-negative")
    if p == q:
        return 1
    if q == 0 or q > p:
        return 0
    return q * stirling2(p - 1, q) + stirling2(p - 1, q - 1)


def _check_eta_args(tilde_alpha: int, bar_alpha: int, n: int) -> None:
    if not (2 <= bar_alpha <= tilde_alpha):
        raise ValidationError("eta requires 2 <= bar_alpha <= tilde_alpha")
    if tilde_alpha > n - 1:
        raise ValidationError("eta requires tilde_alpha <= n - 1")
    # w runs up to tilde_alpha - 1 <= n - 2; w >= n - 1 would zero the
    # closed-form product and break the 1/(n-w-2)! factor.
    if tilde_alpha - 1 >= n - 1:
        raise ValidationError("eta inner index reached n - 1; out of domain")


def _inner_series_closed(w: int, n: int) -> Fraction:
    # sum_{p >= w} S(p, w)/n^p  ==  (1/n)^w / prod_{k=1..w} (1 - k/n)
    prod = Fraction(1)
    for k in range(1, w + 1):
        prod *= 1 - Fraction(k, n)
    return Fraction(1, n) ** w / prod


def _inner_series_truncated(w: int, n: int, rel_tol: Fraction) -> Fraction:
    # Direct sum with a geometric tail bound: S(p, w) <= w^p / w!, so the
    # tail past P is below (w/n)^(P+1) / (w! (1 - w/n)).
    total = Fraction(0)
    p = w
    ratio = Fraction(w, n)
    wfact = math.factorial(w)
    while True:
        total += Fraction(stirling2(p, w), n**p)
        tail = ratio ** (p + 1) / (wfact * (1 - ratio))
        if total > 0 and tail <= rel_tol * total:
            return total
        p += 1


def eta_series(tilde_alpha: int, bar_alpha: int, n: int, rel_tol="1/1000000000000000") -> Fraction:
    """Truncated-series evaluation, the independent cross-check for eta."""
    _check_eta_args(tilde_alpha, bar_alpha, n)
    rel = parse_exact(rel_tol)
    total = Fraction(0)
    for w in range(bar_alpha - 1, tilde_alpha):
        total += _inner_series_truncated(w, n, rel) / math.factorial(n - w - 2)
    return Fraction(math.factorial(n - 1), n**3) * total


@lru_cache(maxsize=None)
def eta(tilde_alpha: int, bar_alpha: int, n: int) -> Fraction:
    """Correction mass of the bold_start second branch (closed form).

    Evaluated via the generating-function identity and self-checked against
    the truncated series to 1e-15 relative on first use.
    """
    _check_eta_args(tilde_alpha, bar_alpha, n)
    total = Fraction(0)
    for w in range(bar_alpha - 1, tilde_alpha):
        total += _inner_series_closed(w, n) / math.factorial(n - w - 2)
    value = Fraction(math.factorial(n - 1), n**3) * total
    approx = eta_series(tilde_alpha, bar_alpha, n)
    if value == 0 or abs(value - approx) > Fraction(1, 10**15) * value:
        raise ArithmeticError(
            f"eta self-check failed: closed form {value} vs series {approx}"
        )
    return value


def predict_action_limit(m: int, n: int, tau) -> Fraction:
    """Common limit action of the uninfected agents when |infected| = m.

    gamma = tau*m / ((1+tau)*m - tau*(n-1)) when (n-1)*tau < m, else 1.
    """
    tau = parse_exact(tau)
    if not 1 <= m <= n:
        raise ValidationError("m must lie in 1..n")
    if (n - 1) * tau >= m:
        return Fraction(1)
    return tau * m / ((1 + tau) * m - tau * (n - 1))


# ---------------------------------------------------------------------------
# Laws
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ActionProfileClass:
    """A limiting action profile shape.

    ``all_ones`` is the everyone-at-1 profile.  ``partial(m)`` profiles have
    agent 1 plus m-1 others at action 1 and every remaining agent at the
    common value ``tau*m / ((1+tau)*m - tau*(n-1))`` (< 1 iff m > (n-1)tau).
    There are C(n-1, m-1) distinct tuples in the class.
    """

    kind: str  # "all_ones" | "partial"
    m: Optional[int] = None
    off_value: Optional[Fraction] = None

    @staticmethod
    def all_ones() -> "ActionProfileClass":
        return ActionProfileClass(kind="all_ones")

    @staticmethod
    def partial(m: int, n: int, tau) -> "ActionProfileClass":
        tau = parse_exact(tau)
        if not 1 <= m <= n - 1:
            raise ValidationError("partial profile class needs 1 <= m <= n-1")
        if m < exact_floor(tau * (n - 1)) + 1:
            raise ValidationError("partial profile class needs m > (n-1)*tau")
        off = predict_action_limit(m, n, tau)
        return ActionProfileClass(kind="partial", m=m, off_value=off)

    def label(self) -> str:
        return "all_ones" if self.kind == "all_ones" else f"partial_{self.m}"

    def to_json_dict(self) -> dict:
        doc = {"class": self.label()}
        if self.kind == "partial":
            doc["ones"] = self.m
            doc["off_value"] = format_exact(self.off_value)
        return doc


@dataclass(frozen=True)
class LawAtom:
    """One exchangeable block of the law: `count` items, equal probability."""

    descriptor: object  # (size, contains_1) or ActionProfileClass
    count: int
    per_item: Fraction

    @property
    def total(self) -> Fraction:
        return self.count * self.per_item


@dataclass(frozen=True)
class Law:
    """Exact limiting distribution over infected sets or action profiles."""

    over: str  # "infected_sets" | "action_profiles"
    n: int
    regime: Regime
    bounds: RegimeThresholds
    atoms: tuple

    def total_mass(self) -> Fraction:
        return sum((atom.total for atom in self.atoms), Fraction(0))

    def size_law(self) -> tuple:
        """Vector of P(|infected| = m) for m = 1..n (infected-set laws)."""
        if self.over != "infected_sets":
            raise ValidationError("size_law is only defined for infected-set laws")
        out = [Fraction(0)] * self.n
        for atom in self.atoms:
            size, _ = atom.descriptor
            out[size - 1] += atom.total
        return tuple(out)

    def class_masses(self) -> dict:
        if self.over != "action_profiles":
            raise ValidationError("class_masses is only defined for action-profile laws")
        return {atom.descriptor.label(): atom.total for atom in self.atoms}

    def probability_of_set(self, agents: frozenset) -> Fraction:
        if self.over != "infected_sets":
            raise ValidationError("probability_of_set needs an infected-set law")
        size = len(agents)
        has_one = 1 in agents
        for atom in self.atoms:
            if atom.descriptor == (size, has_one):
                return atom.per_item
        return Fraction(0)

    def expand(self):
        """Materialize (frozenset, probability) pairs; guarded to n <= 12."""
        if self.over != "infected_sets":
            raise ValidationError("expand is only defined for infected-set laws")
        if self.n > 12:
            raise ValidationError("expand is limited to n <= 12")
        from itertools import combinations

        others = [i for i in range(2, self.n + 1)]
        for atom in self.atoms:
            size, has_one = atom.descriptor
            if not has_one:
                continue
            for rest in combinations(others, size - 1):
                yield frozenset((1,) + rest), atom.per_item

    def to_json_dict(self) -> dict:
        doc = {
            "over": self.over,
            "n": self.n,
            "regime": self.regime.value,
            "thresholds": self.bounds.to_json_dict(),
        }
        if self.over == "infected_sets":
            doc["size_law"] = [format_exact(p) for p in self.size_law()]
            doc["atoms"] = [
                {
                    "size": atom.descriptor[0],
                    "contains_agent_1": atom.descriptor[1],
                    "sets": atom.count,
                    "probability_per_set": format_exact(atom.per_item),
                    "probability_total": format_exact(atom.total),
                }
                for atom in self.atoms
            ]
        else:
            doc["action_law"] = [
                dict(
                    atom.descriptor.to_json_dict(),
                    tuples=atom.count,
                    probability_per_tuple=format_exact(atom.per_item),
                    probability_total=format_exact(atom.total),
                )
                for atom in self.atoms
            ]
        return doc


def _per_set(n: int, m: int) -> Fraction:
    return Fraction(1, n * math.comb(n - 1, m - 1))


def _set_atom(n: int, m: int, total: Fraction) -> LawAtom:
    count = math.comb(n - 1, m - 1)
    return LawAtom(descriptor=(m, True), count=count, per_item=total / count)


def infected_law(n: int, a, tau) -> Law:
    """Exact law of the limiting infected set for the homogeneous preset."""
    a, tau = _check_params(n, a, tau)
    regime = classify_regime(n, a, tau)
    bounds = thresholds(n, a, tau)
    atoms: list[LawAtom] = []

    def singleton(mass: Fraction) -> LawAtom:
        return LawAtom(descriptor=(1, True), count=1, per_item=mass)

    if regime == Regime.ZERO_START:
        alpha = bounds.alpha
        atoms.append(singleton(1 - Fraction(alpha - 1, n)))
        for m in range(2, alpha + 1):
            atoms.append(_set_atom(n, m, Fraction(1, n)))
    elif regime == Regime.FULL_START:
        if tau >= Fraction(1, n - 1):
            atoms.append(singleton(Fraction(1)))
        else:
            atoms.append(_set_atom(n, n - 1, Fraction(n - 1, n * n)))
            atoms.append(LawAtom((n, True), 1, 1 - Fraction(n - 1, n * n)))
    elif regime == Regime.CAUTIOUS_START:
        ha = bounds.hat_alpha
        atoms.append(singleton(1 - Fraction(ha - 1, n)))
        for m in range(2, ha + 1):
            atoms.append(_set_atom(n, m, Fraction(1, n)))
    elif regime == Regime.BOLD_START:
        ta, ba = bounds.tilde_alpha, bounds.bar_alpha
        if ta + 1 <= ba:
            atoms.append(singleton(1 - Fraction(ta - 1, n)))
            for m in range(2, ta + 1):
                atoms.append(_set_atom(n, m, Fraction(1, n)))
        else:
            e = eta(ta, ba, n)
            atoms.append(singleton(1 - Fraction(ta - 1, n)))
            for m in range(2, ba):
                atoms.append(_set_atom(n, m, Fraction(1, n)))
            top = Fraction(ta - (ba - 1), n) - e
            if top < 0:
                raise ArithmeticError(
                    f"size-n mass {top} is negative for n={n}, a={a}, tau={tau}; "
                    "eta exceeded its budget"
                )
            atoms.append(_set_atom(n, n - 1, e))
            atoms.append(LawAtom((n, True), 1, top))
    elif regime == Regime.LOW_IMMUNITY:
        if tau * (n - 1) == a:
            atoms.append(LawAtom((n, True), 1, Fraction(1)))
        else:
            atoms.append(_set_atom(n, n - 1, Fraction(n - 1, n * n)))
            atoms.append(LawAtom((n, True), 1, 1 - Fraction(n - 1, n * n)))
    else:
        raise UncoveredRegimeError(
            f"no catalogued law for n={n}, a={a}, tau={tau} "
            f"(band a/(n-1) < tau < 1/(n-1))"
        )

    atoms = [atom for atom in atoms if atom.per_item != 0]
    law = Law(over="infected_sets", n=n, regime=regime, bounds=bounds, atoms=tuple(atoms))
    if law.total_mass() != 1:
        raise ArithmeticError(f"law mass {law.total_mass()} != 1 for n={n}, a={a}, tau={tau}")
    return law


def action_law(n: int, a, tau) -> Law:
    """Exact law of the limiting action profile for the homogeneous preset."""
    a, tau = _check_params(n, a, tau)
    regime = classify_regime(n, a, tau)
    bounds = thresholds(n, a, tau)
    atoms: list[LawAtom] = []

    def ones(mass: Fraction) -> LawAtom:
        return LawAtom(ActionProfileClass.all_ones(), 1, mass)

    def partial(m: int, total: Fraction) -> LawAtom:
        count = math.comb(n - 1, m - 1)
        return LawAtom(ActionProfileClass.partial(m, n, tau), count, total / count)

    if regime == Regime.ZERO_START:
        alpha, beta = bounds.alpha, bounds.beta
        if tau >= Fraction(1, n - 1):
            atoms.append(ones(1 - Fraction(alpha - beta + 1, n)))
            for m in range(beta, alpha + 1):
                atoms.append(partial(m, Fraction(1, n)))
        else:
            # the m = n class is the all-ones tuple itself
            atoms.append(ones(Fraction(1, n)))
            for m in range(1, n):
                atoms.append(partial(m, Fraction(1, n)))
    elif regime == Regime.FULL_START:
        if tau >= Fraction(1, n - 1):
            atoms.append(ones(Fraction(1)))
        else:
            atoms.append(ones(1 - Fraction(n - 1, n * n)))
            atoms.append(partial(n - 1, Fraction(n - 1, n * n)))
    elif regime == Regime.CAUTIOUS_START:
        ha, hb = bounds.hat_alpha, bounds.hat_beta
        atoms.append(ones(1 - Fraction(ha - hb + 1, n)))
        for m in range(hb, ha + 1):
            atoms.append(partial(m, Fraction(1, n)))
    elif regime == Regime.BOLD_START:
        ta, ba = bounds.tilde_alpha, bounds.bar_alpha
        tb, bb = bounds.tilde_beta, bounds.bar_beta
        if ta + 1 <= ba:
            atoms.append(ones(1 - Fraction(ta - tb + 1, n)))
            for m in range(tb, ta + 1):
                atoms.append(partial(m, Fraction(1, n)))
        else:
            e = eta(ta, ba, n)
            atoms.append(ones(1 + Fraction(bb - ba, n) - e))
            for m in range(bb, ba):
                atoms.append(partial(m, Fraction(1, n)))
            atoms.append(partial(n - 1, e))
    elif regime == Regime.LOW_IMMUNITY:
        if tau * (n - 1) == a:
            atoms.append(ones(Fraction(1)))
        else:
            atoms.append(ones(1 - Fraction(n - 1, n * n)))
            atoms.append(partial(n - 1, Fraction(n - 1, n * n)))
    else:
        raise UncoveredRegimeError(
            f"no catalogued law for n={n}, a={a}, tau={tau} "
            f"(band a/(n-1) < tau < 1/(n-1))"
        )

    atoms = [atom for atom in atoms if atom.per_item != 0]
    law = Law(over="action_profiles", n=n, regime=regime, bounds=bounds, atoms=tuple(atoms))
    if law.total_mass() != 1:
        raise ArithmeticError(f"law mass {law.total_mass()} != 1 for n={n}, a={a}, tau={tau}")
    return law


def classify_action_profile(actions, infected, n: int, tau, tolerance=0):
    """Match an action profile to all_ones / partial(m), or None.

    ``tolerance`` must be 0 in rational mode; a small positive float is
    allowed for float-mode profiles.  ``infected`` is used as a sanity
    screen: infected agents must sit at action 1.
    """
    if len(actions) != n:
        raise ValidationError("profile length must equal n")
    exact = tolerance == 0
    if exact and isinstance(tau, float):
        raise ValidationError("exact classification (tolerance=0) needs an exact tau")
    tau_x = float(tau) if isinstance(tau, float) else parse_exact(tau)

    def close(x, y):
        return x == y if exact else abs(x - y) <= tolerance

    one = 1 if exact else 1.0
    for i in infected:
        if not close(actions[i - 1], one):
            return None
    if all(close(x, one) for x in actions):
        return ActionProfileClass.all_ones()
    if not close(actions[0], one):
        return None
    m = sum(1 for x in actions if close(x, one))
    if not 1 <= m <= n - 1 or m <= tau_x * (n - 1):
        return None
    if exact:
        cls = ActionProfileClass.partial(m, n, tau_x)
        off = cls.off_value
    else:
        off = tau_x * m / ((1 + tau_x) * m - tau_x * (n - 1))
        cls = ActionProfileClass(kind="partial", m=m, off_value=off)
    for x in actions:
        if not close(x, one) and not close(x, off):
            return None
    return cls
