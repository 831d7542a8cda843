"""Acceptance suite: one test per quantitative/structural criterion, each
printing a PASS/FAIL line (run with `pytest tests/test_acceptance.py -v -s`
to watch them stream).

Threshold searches dominate the runtime (a few minutes on the numba
backend); results are cached across criteria within the session.
"""

import functools
import itertools
import math
from dataclasses import replace

import numpy as np

from lotussim import model as M
from lotussim.adversary import AttackConfig, AttackKind, ReportingConfig
from lotussim.core import NodeKind, ProtocolParams
from lotussim.engine import (
    STREAM_SEEDING,
    SimConfig,
    _stream,
    build_report,
    init_state,
    run,
    seed_round,
    step_round,
)
from lotussim.harness import analytic_seed_coverage, find_threshold
from lotussim import kernels_numpy
from model_oracle import oracle_step

PANEL = (0, 1, 2, 3, 4)


def check(num, name, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {num:>2} {name}: {status} ({detail})")
    assert ok, f"{name}: {detail}"


def base_config(**params_overrides):
    params = replace(ProtocolParams(), **params_overrides)
    return SimConfig(params=params)


@functools.lru_cache(maxsize=None)
def threshold(scenario: str, kind: AttackKind, seeds: tuple) -> float:
    configs = {
        "default": base_config(),
        "push10": base_config(push_size=10),
        "bonus4": replace(
            base_config(push_size=4, obedient_bonus=True), obedient_frac=1.0
        ),
    }
    return find_threshold(configs[scenario], kind, seeds=seeds).threshold


class TestThresholds:
    def test_01_threshold_ordering_strict_per_seed(self):
        orderings = []
        ok = True
        for seed in PANEL:
            ideal = threshold("default", AttackKind.IDEAL, (seed,))
            trade = threshold("default", AttackKind.TRADE, (seed,))
            crash = threshold("default", AttackKind.CRASH, (seed,))
            orderings.append(f"seed{seed}: {ideal:.2f}<{trade:.2f}<{crash:.2f}")
            ok = ok and (ideal < trade < crash)
        check(1, "threshold-ordering", ok, "; ".join(orderings))

    def test_02_threshold_magnitudes(self):
        crash = threshold("default", AttackKind.CRASH, PANEL)
        trade = threshold("default", AttackKind.TRADE, PANEL)
        ideal = threshold("default", AttackKind.IDEAL, PANEL)
        ok = (0.34 <= crash <= 0.50) and (0.14 <= trade <= 0.30) and (0.02 <= ideal <= 0.10)
        check(2, "threshold-magnitudes", ok,
              f"crash={crash:.3f} in [0.34,0.50], trade={trade:.3f} in [0.14,0.30], "
              f"ideal={ideal:.3f} in [0.02,0.10]")

    def test_03_push_size_defense(self):
        ideal2 = threshold("default", AttackKind.IDEAL, PANEL)
        trade2 = threshold("default", AttackKind.TRADE, PANEL)
        ideal10 = threshold("push10", AttackKind.IDEAL, PANEL)
        trade10 = threshold("push10", AttackKind.TRADE, PANEL)
        ok = ideal10 >= 2 * ideal2 and ideal10 >= 0.10 and trade10 >= 1.5 * trade2
        check(3, "push-size-defense", ok,
              f"ideal {ideal2:.3f}->{ideal10:.3f} (needs >=2x and >=0.10), "
              f"trade {trade2:.3f}->{trade10:.3f} (needs >=1.5x)")

    def test_04_obedient_defense(self):
        trade2 = threshold("default", AttackKind.TRADE, PANEL)
        trade_ob = threshold("bonus4", AttackKind.TRADE, PANEL)
        ok = trade_ob >= 1.3 * trade2
        check(4, "obedient-defense", ok,
              f"trade {trade2:.3f}->{trade_ob:.3f} (needs >=1.3x)")


class TestSeedingCoverage:
    def test_05a_analytic_value(self):
        value = analytic_seed_coverage(250, 10, 12)
        ok = abs(value - 0.387) <= 0.005
        check("5a", "analytic-coverage-magnitude", ok,
              f"analytic={value:.6f}, asserted window 0.387 +/- 0.005; the exact "
              f"hypergeometric complement 1-C(240,12)/C(250,12) equals 0.394209")

    def test_05b_empirical_matches_analytic(self):
        params = ProtocolParams()
        value = analytic_seed_coverage(250, 10, 12)
        coalition = np.arange(10)
        hits = 0
        draws = 0
        eligible = np.arange(250)
        for round_no in range(1000):
            placements = seed_round(round_no, params, _stream(99, STREAM_SEEDING, round_no), eligible)
            for row in placements:
                draws += 1
                if np.isin(row, coalition).any():
                    hits += 1
        est = hits / draws
        sigma = math.sqrt(value * (1 - value) / draws)
        ok = abs(est - value) <= 3 * sigma
        check("5b", "empirical-coverage", ok,
              f"empirical={est:.4f} vs analytic={value:.4f}, 3sigma={3 * sigma:.4f}")


class TestSatiatedIsolatedGap:
    def test_06_satiated_near_perfect_at_ideal_4pct(self):
        ok = True
        details = []
        for seed in (0, 1, 2):
            config = replace(
                base_config(),
                attack=AttackConfig(kind=AttackKind.IDEAL, attacker_frac=0.04),
                master_seed=seed,
            )
            report = run(config)
            sat = report.satiated_honest.mean_delivery
            iso = report.isolated.mean_delivery
            details.append(f"seed{seed}: sat={sat:.4f} iso={iso:.4f}")
            ok = ok and sat > 0.99 and sat > iso
        check(6, "satiated-isolated-gap", ok, "; ".join(details))


class TestAbstractModel:
    def test_07_permanent_satiation_silences_a_node(self):
        target = 3
        worst = 0
        for seed in range(20):
            system = M.make_system(
                M.cycle_graph(8), tokens=8, contact_budget=2, altruism=0.0,
                attack_schedule=lambda r: {target},
            )
            state = M.initial_state(system)
            rng = np.random.default_rng(seed)
            for _ in range(200):
                state = M.model_step(state, system, rng)
            worst = max(worst, state.uploads[target])
        check(7, "observation-silenced-node", worst == 0,
              f"uploads by permanently satiated node over 200 rounds x 20 seeds: max={worst}")

    def test_08_cut_and_rare_token_attacks(self):
        # 3x3 grid with the middle column satiated: token 0 lives only in
        # the left column, so the right column can never collect it.
        alloc = {v: {1} for v in range(9)}
        for v in (0, 3, 6):
            alloc[v] = {0, 1}
        cut = {1, 4, 7}
        grid_system = M.make_system(
            M.grid_graph(3, 3), tokens={0, 1}, allocation=alloc,
            contact_budget=2, attack_schedule=lambda r: cut,
        )
        expected_grid = M.find_unreachable_tokens(grid_system, cut)
        assert expected_grid[frozenset({2, 5, 8})] == frozenset({0})

        # Rare token: token 0 exists only at node 0, which is satiated.
        rare_alloc = {v: {1} for v in range(6)}
        rare_alloc[0] = {0, 1}
        rare_system = M.make_system(
            M.cycle_graph(6), tokens={0, 1}, allocation=rare_alloc,
            contact_budget=1, attack_schedule=lambda r: {0},
        )
        expected_rare = M.find_unreachable_tokens(rare_system, {0})

        violations = 0
        for system, expected in ((grid_system, expected_grid), (rare_system, expected_rare)):
            for seed in range(20):
                state = M.initial_state(system)
                rng = np.random.default_rng(seed)
                for _ in range(60):
                    state = M.model_step(state, system, rng)
                for comp, missing in expected.items():
                    for v in comp:
                        if state.holdings[v] & missing:
                            violations += 1
        check(8, "cut-and-rare-token", violations == 0,
              f"unreachable-token deliveries observed: {violations} (20 seeds per scenario)")

    def test_09_altruism_converges(self):
        converged = 0
        worst = 0
        for seed in range(100):
            system = M.make_system(M.cycle_graph(20), tokens=20,
                                   contact_budget=1, altruism=0.1)
            result, _ = M.run_until_all_satiated(system, 1000, np.random.default_rng(seed))
            if result is not None:
                converged += 1
                worst = max(worst, result)
        check(9, "altruism-convergence", converged == 100,
              f"{converged}/100 seeds converged within 1000 rounds (slowest: {worst})")

    def test_10_oracle_equivalence(self):
        graphs = []
        for n in (2, 3, 4, 5):
            graphs.append(M.path_graph(n))
            graphs.append(M.complete_graph(n))
            if n >= 3:
                graphs.append(M.cycle_graph(n))
        graphs.append(M.gnp_graph(5, 0.7, seed=1))
        mismatches = 0
        cases = 0
        for graph, n_tokens, altruism, attacked in itertools.product(
            graphs, (1, 2, 3), (0.0, 1.0), (frozenset(), frozenset({0}))
        ):
            schedule = (lambda r, a=attacked: a) if attacked else None
            system = M.make_system(graph, tokens=n_tokens, contact_budget=2,
                                   altruism=altruism, attack_schedule=schedule)
            for seed in range(10):
                state = M.initial_state(system)
                expected = [set(h) for h in state.holdings]
                rng_main = np.random.default_rng(seed)
                rng_oracle = np.random.default_rng(seed)
                for _ in range(4):
                    expected = oracle_step(expected, state.round_no, system, rng_oracle)
                    state = M.model_step(state, system, rng_main)
                    cases += 1
                    if state.holdings != expected:
                        mismatches += 1
        check(10, "oracle-equivalence", mismatches == 0,
              f"{cases} step comparisons across deterministic instances, {mismatches} mismatches")


def fuzz_config(seed):
    rng = np.random.default_rng(10_000 + seed)
    kind = AttackKind(int(rng.integers(0, 4)))
    n = int(rng.integers(20, 61))
    lifetime = int(rng.integers(3, 7))
    rounds = int(rng.integers(4 * lifetime, 60))
    return SimConfig(
        params=ProtocolParams(
            num_nodes=n,
            updates_per_round=int(rng.integers(2, 6)),
            update_lifetime=lifetime,
            copies_seeded=int(rng.integers(1, 6)),
            push_size=int(rng.integers(1, 11)),
            recent_window=int(rng.integers(1, 4)),
            expiring_window=int(rng.integers(1, 4)),
            obedient_bonus=bool(rng.integers(0, 2)),
        ),
        attack=AttackConfig(
            kind=kind,
            attacker_frac=float(rng.uniform(0.05, 0.4)) if kind is not AttackKind.NONE else 0.0,
            satiate_frac=float(rng.uniform(0.3, 0.9)),
            rotation_interval=int(rng.integers(3, 10)) if rng.random() < 0.25 else None,
        ),
        reporting=ReportingConfig(
            enabled=bool(rng.random() < 0.4),
            service_cap=int(rng.integers(1, 12)),
            eviction_threshold=int(rng.integers(1, 4)),
        ),
        obedient_frac=float(rng.uniform(0, 1)),
        total_rounds=rounds,
        warmup_rounds=int(rng.integers(0, max(1, rounds - lifetime))),
        master_seed=int(rng.integers(0, 2**31)),
    )


class TestPropertyFuzz:
    def test_11_property_suites_over_fuzz_run(self):
        violations = []
        for i in range(50):
            config = fuzz_config(i)
            audit = []
            state = init_state(config)
            for _ in range(config.total_rounds):
                step_round(state, kernels_numpy, audit=audit)
            report_numpy = build_report(state)
            report_numba = run(config, backend="numba")
            rerun_numba = run(config, backend="numba")

            if not (report_numpy == report_numba == rerun_numba):
                violations.append(f"cfg{i}: backend/determinism mismatch")

            attacker_kind = int(NodeKind.ATTACKER)
            upr = config.params.updates_per_round
            lifetime = config.params.update_lifetime
            seen = set()
            for rec in audit:
                key = (rec.round_no, rec.phase, rec.initiator)
                if key in seen:
                    violations.append(f"cfg{i}: double initiation {key}")
                seen.add(key)
                for uid in rec.given_by_initiator + rec.given_by_responder:
                    release = uid // upr
                    if not release <= rec.round_no <= release + lifetime - 1:
                        violations.append(f"cfg{i}: transfer outside lifetime {rec}")
                if rec.initiator_satiated and rec.initiator_kind != attacker_kind:
                    violations.append(f"cfg{i}: satiated initiator {rec}")
                honest = (rec.initiator_kind != attacker_kind
                          and rec.responder_kind != attacker_kind)
                if rec.phase == "balanced" and honest:
                    if not config.params.obedient_bonus:
                        if len(rec.given_by_initiator) != len(rec.given_by_responder):
                            violations.append(f"cfg{i}: parity broken {rec}")
                    else:
                        for gave, got in (
                            (rec.given_by_initiator, rec.given_by_responder),
                            (rec.given_by_responder, rec.given_by_initiator),
                        ):
                            if len(gave) > len(got) + 1 or (len(gave) > len(got) and not got):
                                violations.append(f"cfg{i}: bonus bound broken {rec}")
                if rec.phase == "push" and honest:
                    if len(rec.given_by_initiator) > config.params.push_size:
                        violations.append(f"cfg{i}: push overloaded {rec}")
                    if len(rec.given_by_responder) + rec.junk_units != len(rec.given_by_initiator):
                        violations.append(f"cfg{i}: push payment mismatch {rec}")

            evicted_rows = set(np.nonzero(state.evicted)[0].tolist())
            heavy_rows = set(
                np.nonzero(state.reported_by.sum(axis=1) >= config.reporting.eviction_threshold)[0].tolist()
            ) if config.reporting.enabled else set()
            if evicted_rows != heavy_rows:
                violations.append(f"cfg{i}: eviction/report inconsistency")

            if report_numpy.total_receives != report_numpy.total_uploads + report_numpy.total_seed_placements:
                violations.append(f"cfg{i}: provenance conservation broken")

            if config.attack.kind is AttackKind.CRASH:
                attackers = state.kinds == NodeKind.ATTACKER
                if attackers.any() and int(state.uploaded[attackers].sum()) + state.ideal_uploads != 0:
                    violations.append(f"cfg{i}: crash attacker uploaded")

            if (config.attack.kind is AttackKind.TRADE
                    and config.attack.rotation_interval is None):
                for rec in audit:
                    giver_is_attacker = (
                        rec.initiator_kind == attacker_kind and rec.given_by_initiator
                    )
                    if giver_is_attacker and not state.initial_targeted[rec.responder]:
                        violations.append(f"cfg{i}: attacker served isolated node {rec}")

            if (config.attack.kind is AttackKind.IDEAL
                    and config.attack.rotation_interval is None
                    and not config.reporting.enabled):
                sat_honest = state.initial_targeted & (state.kinds != NodeKind.ATTACKER)
                for node in np.nonzero(sat_honest)[0]:
                    if np.any(state.bcast_pool & ~state.hold[node]):
                        violations.append(f"cfg{i}: ideal broadcast missed node {node}")
                        break

        check(11, "property-fuzz", not violations,
              f"50 randomized configs; violations: {violations[:5] if violations else 'none'}")
