"""Trajectory engines: deterministic and seeded runs, absorption, sampling.

A run applies one epoch per sequence entry and stops when the limit of the
process is pinned down.  Two stopping certificates are used:

* **fixed point** -- every agent's best response equals its current action
  and the infection update adds nobody.  Every later state then equals this
  one, whatever the sequence does.
* **frozen infected set** -- every infected agent sits at action 1 and every
  uninfected agent j satisfies ``a_j * r_j <= tau(j)``.  The condition is
  inductive: an infected mover changes nothing, and an uninfected mover's
  action can only rise (its current action already satisfies
  ``a_j <= tau(j)/r_j``), which lowers every other uninfected agent's
  exposure.  So the infected set never grows again.  For uniform-weight,
  common-tau configs the limiting actions are then known in closed form
  (1 on the infected set, ``predict_action_limit(m, n, tau)`` elsewhere),
  and the projected state is itself an exact fixed point.

The projection is only taken for *seeded* sequences, where every agent moves
infinitely often with probability 1.  Explicit finite sequences stop on
exact fixed points only.  The distinction matters: with two or more
uninfected survivors and a limit below 1, the action profile climbs toward
its limit geometrically without ever reaching it, so exact fixed points
never occur along such trajectories and the projection is the only
finite-time limit certificate available.

Seeded sequences draw from a Philox 4x64 (10 rounds) counter-based
generator keyed by ``(master_seed, stream_id)`` with the counter starting at
zero, so every sample is reproducible in isolation and aggregate results
cannot depend on worker count or scheduling.
"""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

import numpy as np

from .model import (
    EpochRecord,
    ModelConfig,
    State,
    ValidationError,
    best_response,
    epoch_step,
    infection_update,
)
from .theory import classify_action_profile, predict_action_limit

__all__ = [
    "AgentSequence",
    "Trajectory",
    "EmpiricalLaw",
    "FirstHitStats",
    "is_absorbing",
    "run_dvsp",
    "run_svsp_sample",
    "monte_carlo",
    "first_hit_stats",
]

_CHUNK = 64  # agents drawn per RNG request

FIXED_POINT = "fixed_point"
FROZEN_SET = "frozen_infected_set"


@dataclass(frozen=True)
class AgentSequence:
    """Either an explicit finite agent list or a seeded infinite stream."""

    kind: str  # "explicit" | "seeded"
    entries: tuple = ()
    seed: int = 0
    stream: int = 0

    @staticmethod
    def explicit(entries: Iterable[int]) -> "AgentSequence":
        ents = tuple(entries)
        for e in ents:
            if not isinstance(e, int) or isinstance(e, bool):
                raise ValidationError(f"sequence entry {e!r} is not an integer")
        return AgentSequence(kind="explicit", entries=ents)

    @staticmethod
    def seeded(seed: int, stream: int = 0) -> "AgentSequence":
        if not isinstance(seed, int) or not 0 <= seed < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        if not isinstance(stream, int) or stream < 0:
            raise ValidationError("stream id must be a non-negative integer")
        return AgentSequence(kind="seeded", seed=seed, stream=stream)

    def iter_agents(self, n: int):
        if self.kind == "explicit":
            for e in self.entries:
                if not 1 <= e <= n:
                    raise ValidationError(f"sequence entry {e} out of range 1..{n}")
                yield e
            return
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        gen = np.random.Generator(np.random.Philox(key=key))
        while True:
            for v in gen.integers(1, n + 1, size=_CHUNK):
                yield int(v)


@dataclass
class Trajectory:
    """A finished run with its first-move bookkeeping and (maybe) its limit."""

    records: list
    final: State
    absorbed: bool
    absorbed_at: Optional[int]
    certificate: Optional[str]  # FIXED_POINT | FROZEN_SET
    first_hit: tuple            # per-agent first move epoch, None if unseen
    n1: Optional[frozenset]     # movers before agent 1's first move
    limit: Optional[State]
    epochs_run: int = 0

    def to_json_dict(self) -> dict:
        return {
            "absorbed": self.absorbed,
            "absorbed_at": self.absorbed_at,
            "certificate": self.certificate,
            "epochs_run": self.epochs_run,
            "first_hit": list(self.first_hit),
            "n1": sorted(self.n1) if self.n1 is not None else None,
            "final": self.final.to_json_dict(),
            "limit": self.limit.to_json_dict() if self.limit is not None else None,
        }


def is_absorbing(state: State, cfg: ModelConfig) -> bool:
    """True iff every epoch step maps the state to itself."""
    for i in range(1, cfg.n + 1):
        if best_response(i, state, cfg) != state.action(i):
            return False
    return not infection_update(state, cfg)


def _frozen_certificate(state: State, cfg: ModelConfig) -> bool:
    one = cfg.one
    for i in state.infected:
        if state.action(i) != one:
            return False
    return not infection_update(state, cfg)


def _limit_projectable(cfg: ModelConfig) -> bool:
    w = cfg.uniform_weight
    return w is not None and w > 0 and cfg.common_tau is not None


def _project_limit(infected: frozenset, cfg: ModelConfig) -> State:
    """Exact limit state once the infected set is frozen (homogeneous case)."""
    m = len(infected)
    n = cfg.n
    if cfg.arithmetic == "float":
        t = float(cfg.common_tau)
        gamma = 1.0 if (n - 1) * t >= m else t * m / ((1 + t) * m - t * (n - 1))
        one = 1.0
    else:
        gamma = predict_action_limit(m, n, cfg.common_tau)
        one = Fraction(1)
    acts = tuple(one if i in infected else gamma for i in range(1, n + 1))
    return State(infected=infected, actions=acts)


# ---------------------------------------------------------------------------
# Run loop
# ---------------------------------------------------------------------------

def run_dvsp(
    cfg: ModelConfig,
    seq: AgentSequence,
    max_epochs: Optional[int] = None,
    record: bool = True,
) -> Trajectory:
    """Run the process along ``seq`` for at most ``max_epochs`` epochs.

    ``max_epochs`` defaults to 64*n.  The run stops early as soon as the
    limit is certain (see module docstring); a state is only tested for
    absorption after at least one epoch has run, so a run over a non-empty
    sequence that starts on a fixed point reports ``absorbed_at=1``, and an
    empty explicit sequence reports the epoch-0 state.
    """
    if max_epochs is None:
        max_epochs = 64 * cfg.n
    if not isinstance(max_epochs, int) or max_epochs < 0:
        raise ValidationError("max_epochs must be a non-negative integer")
    w = cfg.uniform_weight
    if w is not None and w > 0:
        return _run_uniform(cfg, seq, max_epochs, record)
    return _run_general(cfg, seq, max_epochs, record)


def _finish(records, state, status, t, first_hit, n1, limit):
    return Trajectory(
        records=records,
        final=state,
        absorbed=status is not None,
        absorbed_at=t if status is not None else None,
        certificate=status,
        first_hit=tuple(first_hit),
        n1=n1,
        limit=limit,
        epochs_run=t,
    )


def _run_general(cfg, seq, max_epochs, record):
    """Reference loop on top of epoch_step; any weights, any tau."""
    n = cfg.n
    state = cfg.initial_state()
    records: list[EpochRecord] = []
    first_hit: list[Optional[int]] = [None] * n
    n1 = None
    project = seq.kind == "seeded" and _limit_projectable(cfg)
    agents = seq.iter_agents(n)
    t = 0

    def status_of(st):
        if is_absorbing(st, cfg):
            return FIXED_POINT, st
        if project and _frozen_certificate(st, cfg):
            return FROZEN_SET, _project_limit(st.infected, cfg)
        return None, None

    while True:
        if t >= 1:
            status, limit = status_of(state)
            if status:
                return _finish(records, state, status, t, first_hit, n1, limit)
        if t >= max_epochs:
            break
        chosen = next(agents, None)
        if chosen is None:  # explicit sequence exhausted
            if t == 0:
                status, limit = status_of(state)
                if status:
                    return _finish(records, state, status, 0, first_hit, n1, limit)
            break
        rec = epoch_step(state, chosen, cfg, epoch=t)
        if record:
            records.append(rec)
        if first_hit[chosen - 1] is None:
            first_hit[chosen - 1] = t
            if chosen == 1:
                n1 = frozenset(j for j in range(2, n + 1) if first_hit[j - 1] is not None)
        state = rec.next
        t += 1
    return _finish(records, state, None, t, first_hit, n1, None)


def _run_uniform(cfg, seq, max_epochs, record):
    """O(n)-per-epoch loop for uniform positive weights.

    Uniform weights cancel out of every exposure, so the two running sums
    (total action mass, infected action mass) determine all exposures.
    Kept in lockstep with the reference loop by a cross-check property test.
    """
    n = cfg.n
    tau = cfg.tau
    one = cfg.one
    zero = cfg.zero
    infected = set(cfg.initial_infected)
    acts = list(cfg.initial_actions)
    s_all = sum(acts, zero)
    s_inf = sum((acts[i - 1] for i in infected), zero)
    records: list[EpochRecord] = []
    first_hit: list[Optional[int]] = [None] * n
    n1 = None
    project = seq.kind == "seeded" and _limit_projectable(cfg)
    agents = seq.iter_agents(n)
    t = 0

    def snapshot():
        return State(infected=frozenset(infected), actions=tuple(acts))

    def status_of():
        # Both certificates need all infected at action one and no pending
        # infections; the fixed point additionally needs b_j == a_j for the
        # uninfected.
        for i in infected:
            if acts[i - 1] != one:
                return None, None
        fixed = True
        for j in range(1, n + 1):
            if j in infected:
                continue
            aj = acts[j - 1]
            den = s_all - aj
            if aj != zero and den != zero and aj * s_inf > tau[j - 1] * den:
                return None, None  # pending infection
            if fixed:
                if den == zero or s_inf == zero:
                    b = one
                else:
                    b = tau[j - 1] * den / s_inf
                    if b > one:
                        b = one
                if b != aj:
                    fixed = False
        if fixed:
            return FIXED_POINT, snapshot()
        if project:
            return FROZEN_SET, _project_limit(frozenset(infected), cfg)
        return None, None

    while True:
        if t >= 1:
            status, limit = status_of()
            if status:
                return _finish(records, snapshot(), status, t, first_hit, n1, limit)
        if t >= max_epochs:
            break
        chosen = next(agents, None)
        if chosen is None:
            if t == 0:
                status, limit = status_of()
                if status:
                    return _finish(records, snapshot(), status, 0, first_hit, n1, limit)
            break
        # best response of the chosen agent
        prev_infected = frozenset(infected) if record else None
        ai = acts[chosen - 1]
        if chosen in infected:
            b = one
        else:
            den = s_all - ai
            if den == zero or s_inf == zero:
                b = one
            else:
                b = tau[chosen - 1] * den / s_inf
                if b > one:
                    b = one
        if b != ai:
            acts[chosen - 1] = b
            s_all += b - ai
            if chosen in infected:
                s_inf += b - ai
        # infection update on the intermediate state
        newly = []
        for j in range(1, n + 1):
            if j in infected:
                continue
            aj = acts[j - 1]
            if aj == zero:
                continue
            den = s_all - aj
            if den != zero and aj * s_inf > tau[j - 1] * den:
                newly.append(j)
        for j in newly:
            infected.add(j)
            s_inf += acts[j - 1]
        if record:
            actions = tuple(acts)
            intermediate = State(infected=prev_infected, actions=actions)
            records.append(
                EpochRecord(
                    epoch=t,
                    chosen=chosen,
                    intermediate=intermediate,
                    next=State(infected=frozenset(infected), actions=actions),
                    newly_infected=frozenset(newly),
                )
            )
        if first_hit[chosen - 1] is None:
            first_hit[chosen - 1] = t
            if chosen == 1:
                n1 = frozenset(j for j in range(2, n + 1) if first_hit[j - 1] is not None)
        t += 1
    return _finish(records, snapshot(), None, t, first_hit, n1, None)


def run_svsp_sample(
    cfg: ModelConfig,
    seed: int,
    stream: int = 0,
    max_epochs: Optional[int] = None,
    record: bool = True,
) -> Trajectory:
    """One uniformly random run, fully determined by (seed, stream)."""
    return run_dvsp(cfg, AgentSequence.seeded(seed, stream), max_epochs, record=record)


# ---------------------------------------------------------------------------
# Sampling statistics
# ---------------------------------------------------------------------------

@dataclass
class EmpiricalLaw:
    """Aggregated limit statistics over a batch of seeded runs.

    Probabilities are over the runs whose limit was certified; runs that hit
    the horizon are counted in ``non_absorbed`` and excluded, never silently
    folded into the law.
    """

    samples: int
    non_absorbed: int
    infected_size_counts: tuple
    infected_set_counts: dict
    action_class_counts: dict
    n1_size_counts: tuple
    t1_unobserved: int

    @property
    def absorbed(self) -> int:
        return self.samples - self.non_absorbed

    @property
    def infected_size_probs(self) -> tuple:
        if self.absorbed == 0:
            raise ValidationError("no absorbed runs; no law to report")
        return tuple(Fraction(c, self.absorbed) for c in self.infected_size_counts)

    def to_json_dict(self) -> dict:
        from .numeric import format_exact

        probs = (
            [format_exact(p) for p in self.infected_size_probs]
            if self.absorbed
            else []
        )
        return {
            "samples": self.samples,
            "non_absorbed": self.non_absorbed,
            "infected_size_counts": list(self.infected_size_counts),
            "infected_size_probs": probs,
            "infected_set_counts": {
                ",".join(map(str, sorted(k))): v
                for k, v in sorted(
                    self.infected_set_counts.items(), key=lambda kv: sorted(kv[0])
                )
            },
            "action_class_counts": dict(sorted(self.action_class_counts.items())),
            "n1_size_counts": list(self.n1_size_counts),
            "t1_unobserved": self.t1_unobserved,
        }


@dataclass
class FirstHitStats:
    """Frequencies of |N1| over runs where agent 1's first move was seen."""

    frequencies: tuple
    observed: int
    unobserved: int


def _mc_accumulate(cfg, seed, streams, max_epochs, tolerance):
    n = cfg.n
    sizes = [0] * n
    n1_sizes = [0] * n
    sets: Counter = Counter()
    classes: Counter = Counter()
    non_absorbed = 0
    t1_missing = 0
    for stream in streams:
        traj = run_svsp_sample(cfg, seed, stream, max_epochs, record=False)
        if traj.n1 is None:
            t1_missing += 1
        else:
            n1_sizes[len(traj.n1)] += 1
        if not traj.absorbed:
            non_absorbed += 1
            continue
        lim = traj.limit
        sizes[len(lim.infected) - 1] += 1
        sets[lim.infected] += 1
        cls = classify_action_profile(lim.actions, lim.infected, n, cfg.tau[0], tolerance)
        classes[cls.label() if cls is not None else "unclassified"] += 1
    return sizes, n1_sizes, sets, classes, non_absorbed, t1_missing


def _mc_worker(args):
    cfg_doc, seed, start, stop, max_epochs, tolerance = args
    cfg = ModelConfig.from_json_dict(cfg_doc)
    return _mc_accumulate(cfg, seed, range(start, stop), max_epochs, tolerance)


def monte_carlo(
    cfg: ModelConfig,
    samples: int,
    seed: int,
    max_epochs: Optional[int] = None,
    threads: int = 1,
) -> EmpiricalLaw:
    """Aggregate ``samples`` seeded runs over stream ids 0..samples-1.

    The per-stream RNG derivation makes the result independent of
    ``threads``; accumulation is commutative integer counting.
    """
    if not isinstance(samples, int) or samples < 1:
        raise ValidationError("samples must be a positive integer")
    if not isinstance(threads, int) or threads < 1:
        raise ValidationError("threads must be a positive integer")
    tolerance = 0 if cfg.arithmetic == "rational" else 1e-9
    if threads == 1 or samples < 256:
        parts = [_mc_accumulate(cfg, seed, range(samples), max_epochs, tolerance)]
    else:
        doc = cfg.to_json_dict()
        step = -(-samples // threads)
        jobs = [
            (doc, seed, lo, min(lo + step, samples), max_epochs, tolerance)
            for lo in range(0, samples, step)
        ]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_mc_worker, jobs))

    n = cfg.n
    sizes = [0] * n
    n1_sizes = [0] * n
    sets: Counter = Counter()
    classes: Counter = Counter()
    non_absorbed = 0
    t1_missing = 0
    for s, n1s, st, cl, na, tm in parts:
        sizes = [x + y for x, y in zip(sizes, s)]
        n1_sizes = [x + y for x, y in zip(n1_sizes, n1s)]
        sets.update(st)
        classes.update(cl)
        non_absorbed += na
        t1_missing += tm
    return EmpiricalLaw(
        samples=samples,
        non_absorbed=non_absorbed,
        infected_size_counts=tuple(sizes),
        infected_set_counts=dict(sets),
        action_class_counts=dict(classes),
        n1_size_counts=tuple(n1_sizes),
        t1_unobserved=t1_missing,
    )


def first_hit_stats(trajectories: Iterable[Trajectory]) -> FirstHitStats:
    """Empirical frequencies of |N1| in {0..n-1}; unseen-t1 runs set aside."""
    counts: Counter = Counter()
    unobserved = 0
    n = None
    for traj in trajectories:
        n = len(traj.first_hit)
        if traj.n1 is None:
            unobserved += 1
        else:
            counts[len(traj.n1)] += 1
    if n is None:
        raise ValidationError("no trajectories supplied")
    observed = sum(counts.values())
    freqs = tuple(
        Fraction(counts.get(k, 0), observed) if observed else Fraction(0)
        for k in range(n)
    )
    return FirstHitStats(frequencies=freqs, observed=observed, unobserved=unobserved)
