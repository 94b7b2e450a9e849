"""Exact finite-horizon distribution of the process by dynamic programming.

Instead of replaying all n^T agent sequences, the DP pushes probability mass
through the one-epoch transition: each state contributes 1/n of its mass to
the successor under every possible mover.  Correctness only needs the
transition to be Markov in the state, which it is (the epoch step reads
nothing but the current state).  Equal successor states merge under the
canonical state key, which keeps the support tiny on the homogeneous
presets.

Everything here is exact: probabilities at epoch T are integers over n^T,
carried as integer counts internally and exposed as Fractions.  Float-mode
configs are rejected outright.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from .dynamics import is_absorbing
from .model import ModelConfig, State, ValidationError, epoch_step

__all__ = [
    "StateDistribution",
    "SupportCapExceeded",
    "advance",
    "enumerate_exact",
    "marginal_infected_size",
    "absorbed_mass",
]

DEFAULT_SUPPORT_CAP = 1_000_000


class SupportCapExceeded(RuntimeError):
    """The DP support outgrew the configured cap; nothing was truncated."""


@dataclass
class StateDistribution:
    """Exact probability mixture over canonical states at a fixed epoch."""

    probs: dict  # State -> Fraction
    epoch: int

    def total_mass(self) -> Fraction:
        return sum(self.probs.values(), Fraction(0))

    def support_size(self) -> int:
        return len(self.probs)

    def to_json_dict(self, include_states: bool = True) -> dict:
        from .numeric import format_exact

        doc = {
            "epoch": self.epoch,
            "support_size": self.support_size(),
            "total_mass": format_exact(self.total_mass()),
            "size_marginal": [format_exact(p) for p in marginal_infected_size(self)],
        }
        if include_states:
            doc["states"] = [
                {
                    "infected_mask": s.infected_mask(),
                    "infected": sorted(s.infected),
                    "actions": [format_exact(a) for a in s.actions],
                    "probability": format_exact(p),
                }
                for s, p in sorted(
                    self.probs.items(),
                    key=lambda kv: (kv[0].infected_mask(), kv[0].actions),
                )
            ]
        return doc


def _require_rational(cfg: ModelConfig) -> None:
    if cfg.arithmetic != "rational":
        raise ValidationError("exact enumeration requires rational arithmetic mode")


def _children(state: State, cfg: ModelConfig) -> tuple:
    return tuple(epoch_step(state, v, cfg).next for v in range(1, cfg.n + 1))


def _children_batch(args):
    cfg_doc, states = args
    cfg = ModelConfig.from_json_dict(cfg_doc)
    return [_children(s, cfg) for s in states]


def advance(dist: StateDistribution, cfg: ModelConfig) -> StateDistribution:
    """One exact epoch: every state splits 1/n per possible mover."""
    _require_rational(cfg)
    n = cfg.n
    out: dict[State, Fraction] = {}
    for state, p in dist.probs.items():
        share = p / n
        for child in _children(state, cfg):
            out[child] = out.get(child, Fraction(0)) + share
    return StateDistribution(probs=out, epoch=dist.epoch + 1)


def enumerate_exact(
    cfg: ModelConfig,
    epochs: int,
    support_cap: int = DEFAULT_SUPPORT_CAP,
    threads: int = 1,
) -> StateDistribution:
    """Distribution after exactly ``epochs`` transitions from the seed state.

    Internally runs on integer counts over n^t (fast, gcd-free) with a
    per-state successor cache, so each distinct state is expanded once.
    Raises :class:`SupportCapExceeded` when the support would exceed
    ``support_cap``.
    """
    _require_rational(cfg)
    if not isinstance(epochs, int) or epochs < 0:
        raise ValidationError("epochs must be a non-negative integer")
    if not isinstance(threads, int) or threads < 1:
        raise ValidationError("threads must be a positive integer")
    n = cfg.n
    counts: dict[State, int] = {cfg.initial_state(): 1}
    cache: dict[State, tuple] = {}
    pool = ProcessPoolExecutor(max_workers=threads) if threads > 1 else None
    cfg_doc = cfg.to_json_dict() if pool is not None else None
    try:
        for _ in range(epochs):
            missing = [s for s in counts if s not in cache]
            if pool is not None and len(missing) > 4 * threads:
                chunk = -(-len(missing) // threads)
                jobs = [
                    (cfg_doc, missing[lo : lo + chunk])
                    for lo in range(0, len(missing), chunk)
                ]
                for states_chunk, result in zip(
                    (j[1] for j in jobs), pool.map(_children_batch, jobs)
                ):
                    for s, ch in zip(states_chunk, result):
                        cache[s] = ch
            else:
                for s in missing:
                    cache[s] = _children(s, cfg)
            nxt: dict[State, int] = {}
            for state, c in counts.items():
                for child in cache[state]:
                    nxt[child] = nxt.get(child, 0) + c
            counts = nxt
            if len(counts) > support_cap:
                raise SupportCapExceeded(
                    f"support reached {len(counts)} states, above the cap of "
                    f"{support_cap}; raise support_cap to go further"
                )
    finally:
        if pool is not None:
            pool.shutdown()
    total = n**epochs
    probs = {s: Fraction(c, total) for s, c in counts.items()}
    return StateDistribution(probs=probs, epoch=epochs)


def marginal_infected_size(dist: StateDistribution) -> tuple:
    """P(|infected| = m) for m = 1..n, exactly; sums to the total mass."""
    if not dist.probs:
        raise ValidationError("empty distribution")
    n = len(next(iter(dist.probs)).actions)
    out = [Fraction(0)] * n
    for state, p in dist.probs.items():
        out[len(state.infected) - 1] += p
    return tuple(out)


def absorbed_mass(dist: StateDistribution, cfg: ModelConfig) -> Fraction:
    """Total probability sitting on fixed-point states."""
    total = Fraction(0)
    cache: dict[State, bool] = {}
    for state, p in dist.probs.items():
        hit = cache.get(state)
        if hit is None:
            hit = cache[state] = is_absorbing(state, cfg)
        if hit:
            total += p
    return total
