"""Acceptance gate: every release criterion, one pass/fail line each.

Run with ``pytest -s tests/test_acceptance.py`` to see the report lines;
the summary table prints at the end of the session either way.

Criterion 3 note: the reference-table row (a=0.2, tau=0.05) sits exactly on
the boundary tau = a/(n-1), where the process provably stays at its seed
state until agent 1 first moves (every other mover's best response equals
its current action and every infection product equals tau exactly).  After
the table's 9 transitions the seed state therefore retains probability
(4/5)^9 ~ 0.134, while the printed column is the limit law (0,0,0,0,1).
No finite horizon both reproduces that row and the transient (a=0, tau=0.3)
row, so the boundary row is pinned as a strict xfail with this analysis
rather than силently loosened; the other six rows are asserted for real.
"""

import itertools
import json
import math
import random
import time
from collections import Counter
from fractions import Fraction

import pytest

from conftest import PINNED_ROWS, TABLE1_GRID, UNREACHABLE_PINNED
from epigame import cli
from epigame.analysis import tv_distance
from epigame.dynamics import AgentSequence, run_dvsp, run_svsp_sample
from epigame.enumeration import advance, StateDistribution, enumerate_exact, marginal_infected_size
from epigame.model import ModelConfig, UtilityCurve, best_response, epoch_step, infection_update, utility
from epigame.theory import (
    Regime,
    action_law,
    classify_action_profile,
    classify_regime,
    eta,
    eta_series,
    infected_law,
    predict_action_limit,
)

F = Fraction

_REPORT = []


def record(criterion, passed, detail):
    line = f"ACCEPTANCE {criterion}: {'PASS' if passed else 'FAIL'} - {detail}"
    _REPORT.append(line)
    print(line)


@pytest.fixture(scope="session", autouse=True)
def final_report():
    yield
    print("\n" + "=" * 72)
    print("acceptance summary")
    print("=" * 72)
    for line in _REPORT:
        print(line)


def run_cli_json(args, tmp_path, name):
    out = tmp_path / name
    code = cli.main(args + ["--out", str(out)])
    return code, json.loads(out.read_text())


# ---------------------------------------------------------------------------
# 1. closed-form exactness for the zero-start laws
# ---------------------------------------------------------------------------

def test_criterion_1_zero_start_exactness(tmp_path, capsys):
    t0 = time.time()
    code, doc = run_cli_json(["theory", "--n", "5", "--a", "0", "--tau", "0.25"],
                             tmp_path, "law1.json")
    assert code == 0
    assert doc["size_law"] == ["2/5", "1/5", "1/5", "1/5", "0"]
    code, doc = run_cli_json(["theory", "--n", "5", "--a", "0", "--tau", "0.4"],
                             tmp_path, "law2.json")
    assert code == 0
    assert doc["size_law"] == ["3/5", "1/5", "1/5", "0", "0"]
    elapsed = time.time() - t0
    assert elapsed < 1.0
    capsys.readouterr()
    record(1, True, f"zero-start size laws exact at tau=0.25 and 0.4 ({elapsed:.2f}s)")


# ---------------------------------------------------------------------------
# 2. eta branch exactness and the series cross-check
# ---------------------------------------------------------------------------

def test_criterion_2_eta_branch(tmp_path, capsys):
    t0 = time.time()
    code, doc = run_cli_json(["theory", "--n", "5", "--a", "0.35", "--tau", "0.255"],
                             tmp_path, "law3.json")
    assert code == 0
    assert doc["size_law"] == ["2/5", "0", "0", "6/125", "69/125"]
    closed = eta(4, 2, 5)
    series = eta_series(4, 2, 5)
    rel = abs(closed - series) / closed
    assert rel <= F(1, 10**15)
    elapsed = time.time() - t0
    assert elapsed < 1.0
    capsys.readouterr()
    record(2, True,
           f"eta-branch law exact; closed form vs series rel diff {float(rel):.2e} ({elapsed:.2f}s)")


# ---------------------------------------------------------------------------
# 3. reference-table enumeration regression at the published horizon
# ---------------------------------------------------------------------------

def _run_pinned_row(a, tau, tmp_path):
    code, doc = run_cli_json(
        ["enumerate", "--n", "5", "--a", a, "--tau", tau, "--horizon", "10"],
        tmp_path, f"row_{a}_{tau}.json".replace("/", "-"))
    assert code == 0
    return tuple(F(x) for x in doc["size_marginal"])


def test_criterion_3_table_regression(tmp_path, capsys):
    t0 = time.time()
    tol = F(5, 10**4)
    checked = 0
    for a, tau, printed in PINNED_ROWS:
        if (a, tau) in UNREACHABLE_PINNED:
            continue
        marginal = _run_pinned_row(a, tau, tmp_path)
        for got, want in zip(marginal, printed):
            assert abs(got - F(want)) <= tol, (a, tau, got, want)
        checked += 1
    elapsed = time.time() - t0
    assert elapsed < 60.0
    capsys.readouterr()
    record(3, True,
           f"{checked}/7 printed rows reproduced within 5e-4 at horizon 10 ({elapsed:.1f}s); "
           "boundary row (a=0.2, tau=0.05) is the limit law, unreachable at any horizon (see xfail)")


@pytest.mark.xfail(
    strict=True,
    reason="printed column equals the limit law; the process provably holds "
    "probability (4/5)^9 at the seed state after 9 transitions because "
    "tau = a/(n-1) makes every pre-t1 move a no-op and every infection "
    "product exactly tau",
)
def test_criterion_3_boundary_row_unreachable(tmp_path, capsys):
    a, tau, printed = next(r for r in PINNED_ROWS if (r[0], r[1]) in UNREACHABLE_PINNED)
    marginal = _run_pinned_row(a, tau, tmp_path)
    capsys.readouterr()
    record(3, False,
           f"boundary row (a={a}, tau={tau}): got m=1 mass {float(marginal[0]):.4f} "
           f"= (4/5)^9 vs printed 0; criterion unattainable as stated")
    tol = F(5, 10**4)
    for got, want in zip(marginal, printed):
        assert abs(got - F(want)) <= tol


# ---------------------------------------------------------------------------
# 4. DP equals the average over all explicit sequences
# ---------------------------------------------------------------------------

def test_criterion_4_sequence_oracle(capsys):
    t0 = time.time()
    n, horizon = 3, 6
    grid = [("0", "0.4"), ("0", "0.7"), ("1", "0.3"),
            ("0.3", "0.5"), ("0.8", "0.5"), ("0.8", "0.2")]
    for a, tau in grid:
        cfg = ModelConfig.build(n=n, a=a, tau=tau)
        counter = Counter()
        for seq in itertools.product(range(1, n + 1), repeat=horizon):
            counter[run_dvsp(cfg, AgentSequence.explicit(seq), max_epochs=horizon).final] += 1
        brute = {s: F(c, n**horizon) for s, c in counter.items()}
        dp = enumerate_exact(cfg, horizon)
        assert dp.probs == brute, (a, tau)
        assert marginal_infected_size(dp) == tuple(
            sum((p for s, p in brute.items() if len(s.infected) == m), F(0))
            for m in range(1, n + 1))
    elapsed = time.time() - t0
    assert elapsed < 30.0
    capsys.readouterr()
    record(4, True,
           f"DP equals the 3^{horizon}-sequence average exactly on {len(grid)} points ({elapsed:.1f}s)")


# ---------------------------------------------------------------------------
# 5. finite-horizon convergence to the limit laws
# ---------------------------------------------------------------------------

def test_criterion_5_convergence(capsys):
    reps = {
        Regime.ZERO_START: ("0", "0.4"),
        Regime.FULL_START: ("1", "0.6"),
        Regime.CAUTIOUS_START: ("0.3", "0.5"),
        Regime.BOLD_START: ("0.8", "0.6"),
        Regime.LOW_IMMUNITY: ("0.8", "0.2"),
    }
    horizons = list(range(5, 41, 5))
    details = []
    for regime, (a, tau) in reps.items():
        assert classify_regime(3, a, tau) == regime
        law = infected_law(3, a, tau).size_law()
        cfg = ModelConfig.build(n=3, a=a, tau=tau)
        dist = StateDistribution(probs={cfg.initial_state(): F(1)}, epoch=0)
        tvs = []
        reached = 0
        for h in horizons:
            while reached < h:
                dist = advance(dist, cfg)
                reached += 1
            tvs.append(tv_distance(law, marginal_infected_size(dist)))
        assert any(tv <= F(1, 1000) for tv in tvs), (regime, [float(t) for t in tvs])
        assert all(x >= y for x, y in zip(tvs, tvs[1:])), regime
        details.append(f"{regime.value}@T40={float(tvs[-1]):.1e}")
    capsys.readouterr()
    record(5, True, "tv<=1e-3 within T<=40, nonincreasing: " + ", ".join(details))


# ---------------------------------------------------------------------------
# 6. Monte Carlo statistical check
# ---------------------------------------------------------------------------

def test_criterion_6_monte_carlo(tmp_path, capsys):
    t0 = time.time()
    # float mode: this preset decides every comparison away from any
    # boundary, and 1e5 samples is what the float path exists for
    code, doc = run_cli_json(
        ["simulate", "--n", "5", "--a", "0", "--tau", "0.12",
         "--samples", "100000", "--seed", "20240809", "--arithmetic", "float"],
        tmp_path, "mc.json")
    assert code == 0
    assert doc["non_absorbed"] == 0 and doc["t1_unobserved"] == 0
    probs = [F(c, 100_000) for c in doc["infected_size_counts"]]
    tv = tv_distance(probs, (F(1, 5),) * 5)
    assert tv <= F(1, 100)
    bound = 3 * math.sqrt(0.2 * 0.8 / 100_000)
    n1_freqs = [c / 100_000 for c in doc["n1_size_counts"]]
    worst = max(abs(f - 0.2) for f in n1_freqs)
    assert worst <= bound
    elapsed = time.time() - t0
    assert elapsed < 30.0
    capsys.readouterr()
    record(6, True,
           f"1e5 samples: size-law tv={float(tv):.4f}<=0.01, worst |N1| freq dev "
           f"{worst:.4f}<={bound:.4f} ({elapsed:.1f}s)")


# ---------------------------------------------------------------------------
# 7. invariant suite over random configs and trajectories
# ---------------------------------------------------------------------------

def _random_homogeneous(rng, n=None):
    n = n or rng.randint(2, 6)
    a = F(rng.randint(0, 12), 12)
    tau = F(rng.randint(1, 11), 12)
    return ModelConfig.build(n=n, a=str(a), tau=str(tau))


def _random_state(rng, cfg):
    from epigame.model import State

    acts = tuple(F(rng.randint(0, 8), 8) for _ in range(cfg.n))
    infected = frozenset(rng.sample(range(1, cfg.n + 1), rng.randint(1, cfg.n)))
    return State(infected, acts)


def test_criterion_7_invariant_suite(capsys):
    rng = random.Random(987654321)
    counts = Counter()

    # (a) infected-set monotonicity along whole trajectories
    for _ in range(1500):
        cfg = _random_homogeneous(rng)
        traj = run_svsp_sample(cfg, rng.randint(0, 2**32), max_epochs=100)
        prev = cfg.initial_state()
        for rec in traj.records:
            assert rec.next.infected >= prev.infected
            prev = rec.next
        counts["set monotone"] += 1

    # (b) action monotonicity once the infected set has stabilized
    for _ in range(1500):
        cfg = _random_homogeneous(rng)
        traj = run_svsp_sample(cfg, rng.randint(0, 2**32), max_epochs=100)
        if not traj.records:
            counts["action monotone"] += 1
            continue
        final_set = traj.records[-1].next.infected
        stable_from = 0
        for k, rec in enumerate(traj.records):
            if rec.next.infected != final_set:
                stable_from = k + 1
        for k in range(stable_from + 2, len(traj.records)):
            before, after = traj.records[k - 1].next, traj.records[k].next
            assert all(after.action(i) >= before.action(i) for i in range(1, cfg.n + 1))
        counts["action monotone"] += 1

    # (c) best-response invariance across admissible utility curves,
    #     via the argmax oracle
    curves = [UtilityCurve.identity(), UtilityCurve.polynomial(2), UtilityCurve.polynomial(5)]
    for _ in range(1400):
        cfg = _random_homogeneous(rng)
        s = _random_state(rng, cfg)
        i = rng.randint(1, cfg.n)
        b = best_response(i, s, cfg)
        for curve in curves:
            cfg_c = ModelConfig.build(
                n=cfg.n, a=[str(x) for x in cfg.initial_actions],
                tau=str(cfg.tau[0]), f=curve)
            u_b = utility(i, s.with_action(i, b), cfg_c)
            for x in (F(0), F(1, 3), F(2, 3), F(1)):
                if x != b:
                    assert utility(i, s.with_action(i, x), cfg_c) < u_b
        counts["curve invariance"] += 1

    # (d) scoped fixed point: best response already played and nothing
    #     pending means the epoch changes nothing
    for _ in range(1500):
        cfg = _random_homogeneous(rng)
        s = _random_state(rng, cfg)
        i = rng.randint(1, cfg.n)
        if best_response(i, s, cfg) == s.action(i) and not infection_update(s, cfg):
            assert epoch_step(s, i, cfg).next == s
        counts["fixed point"] += 1

    # (e) freezing: infected all at 1 and uninfected at/below tau pins the set
    frozen_seen = 0
    for _ in range(1500):
        cfg = _random_homogeneous(rng)
        traj = run_svsp_sample(cfg, rng.randint(0, 2**32), max_epochs=100)
        states = [cfg.initial_state()] + [r.next for r in traj.records]
        frozen_at = None
        for k, s in enumerate(states):
            if all(s.action(i) == 1 for i in s.infected) and all(
                s.action(j) <= cfg.tau_of(j)
                for j in range(1, cfg.n + 1) if j not in s.infected):
                frozen_at = k
                break
        if frozen_at is not None:
            frozen_seen += 1
            target = states[frozen_at].infected
            assert all(s.infected == target for s in states[frozen_at:])
        counts["freezing"] += 1
    assert frozen_seen > 300

    # (f) quiescence before agent 1 moves when everyone starts at/below tau
    for _ in range(1500):
        n = rng.randint(2, 6)
        tau = F(rng.randint(2, 11), 12)
        a = F(rng.randint(0, int(tau * 12)), 12)
        cfg = ModelConfig.build(n=n, a=str(a), tau=str(tau))
        traj = run_svsp_sample(cfg, rng.randint(0, 2**32), max_epochs=100)
        t1 = traj.first_hit[0]
        horizon = t1 if t1 is not None else traj.epochs_run
        assert all(rec.next.infected == frozenset({1}) for rec in traj.records[:horizon])
        counts["quiescence"] += 1

    # (g) certified limits classify, with the common action limit matching
    #     the closed form exactly
    for _ in range(1500):
        cfg = _random_homogeneous(rng)
        traj = run_svsp_sample(cfg, rng.randint(0, 2**32), max_epochs=150)
        if not traj.absorbed:
            continue
        lim = traj.limit
        cls = classify_action_profile(lim.actions, lim.infected, cfg.n, cfg.tau[0])
        assert cls is not None
        gamma = predict_action_limit(len(lim.infected), cfg.n, cfg.tau[0])
        for j in range(1, cfg.n + 1):
            if j not in lim.infected:
                assert lim.action(j) == gamma
        if cls.kind == "partial":
            assert cls.off_value == gamma
        counts["limit classification"] += 1
    assert counts["limit classification"] > 1200

    total = sum(counts.values())
    assert total >= 10_000
    capsys.readouterr()
    record(7, True, f"zero violations across {total} random trajectories/states "
           + str(dict(counts)))


# ---------------------------------------------------------------------------
# 8. exact normalization across the whole reference grid
# ---------------------------------------------------------------------------

def test_criterion_8_normalization(table1_dists, capsys):
    laws = 0
    for a, tau in TABLE1_GRID:
        if classify_regime(5, a, tau) != Regime.UNCOVERED:
            assert infected_law(5, a, tau).total_mass() == 1
            assert action_law(5, a, tau).total_mass() == 1
            laws += 1
    # eta branches explicitly among them
    assert infected_law(5, "0.35", "0.255").total_mass() == 1
    assert action_law(5, "0.45", "0.3").total_mass() == 1
    dists = 0
    for (a, tau), dist in table1_dists.items():
        assert dist.total_mass() == 1
        dists += 1
    capsys.readouterr()
    record(8, True,
           f"{laws} law pairs and {dists} state distributions sum to exactly 1")
