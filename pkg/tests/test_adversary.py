"""Attack-strategy and reporting-defense tests."""

import numpy as np
import pytest

from lotussim.adversary import (
    AttackConfig,
    AttackKind,
    ReportingConfig,
    ReportLedger,
    choose_satiated_set,
    crash_exchange,
    file_excess_service_reports,
    ideal_broadcast,
    trade_exchange,
)
from lotussim.core import ConfigError, NodeKind, NodeState, ProtocolParams, UpdateId, live_updates

P = ProtocolParams()


def rng(seed=0):
    return np.random.default_rng(seed)


class TestSatiatedSet:
    def test_reference_scale_arithmetic(self):
        # 250 nodes, 22% attackers, 70% satiated: 55 attackers + 120 honest
        # targets = 175 nodes.
        config = AttackConfig(kind=AttackKind.TRADE, attacker_frac=0.22, satiate_frac=0.70)
        attackers = list(range(55))
        chosen = choose_satiated_set(range(250), attackers, config, rng())
        assert len(chosen) == 175
        assert set(attackers) <= chosen
        assert len(chosen - set(attackers)) == 120

    def test_no_attackers_still_satiates(self):
        config = AttackConfig(kind=AttackKind.CRASH, attacker_frac=0.0)
        chosen = choose_satiated_set(range(250), [], config, rng())
        assert len(chosen) == 175

    def test_attackers_exceed_satiate_frac(self):
        config = AttackConfig(kind=AttackKind.TRADE, attacker_frac=0.8, satiate_frac=0.7)
        attackers = list(range(200))
        chosen = choose_satiated_set(range(250), attackers, config, rng())
        assert chosen == frozenset(attackers)

    def test_no_attack_is_empty(self):
        config = AttackConfig(kind=AttackKind.NONE)
        assert choose_satiated_set(range(250), [], config, rng()) == frozenset()

    def test_deterministic_per_seed(self):
        config = AttackConfig(kind=AttackKind.IDEAL, attacker_frac=0.04)
        a = choose_satiated_set(range(100), range(4), config, rng(9))
        b = choose_satiated_set(range(100), range(4), config, rng(9))
        c = choose_satiated_set(range(100), range(4), config, rng(10))
        assert a == b
        assert a != c

    @pytest.mark.parametrize(
        "bad",
        [
            dict(kind=AttackKind.CRASH, attacker_frac=1.5),
            dict(kind=AttackKind.CRASH, attacker_frac=-0.1),
            dict(kind=AttackKind.CRASH, satiate_frac=2.0),
            dict(kind=AttackKind.NONE, attacker_frac=0.2),
            dict(kind=AttackKind.CRASH, rotation_interval=0),
        ],
    )
    def test_validation(self, bad):
        with pytest.raises(ConfigError):
            AttackConfig(**bad).validate()


class TestCrash:
    def test_nothing_transfers(self):
        res = crash_exchange()
        assert res.given_by_a == frozenset()
        assert res.given_by_b == frozenset()
        assert res.junk_units == 0


class TestIdealBroadcast:
    def test_seeded_updates_reach_all_satiated(self):
        pool = {UpdateId(3, 0), UpdateId(3, 1)}
        nodes = [NodeState(i, NodeKind.RATIONAL, holdings={UpdateId(3, 0)}) for i in range(3)]
        placed = ideal_broadcast(pool, nodes, 3, P)
        assert placed == 3  # each node lacked exactly one of the two
        for n in nodes:
            assert pool <= n.holdings

    def test_expired_pool_entries_not_forwarded(self):
        pool = {UpdateId(0, 0)}
        n = NodeState(0, NodeKind.RATIONAL)
        assert ideal_broadcast(pool, [n], 15, P) == 0
        assert n.holdings == set()

    def test_nothing_new_means_no_transfers(self):
        pool = {UpdateId(2, 0)}
        n = NodeState(0, NodeKind.RATIONAL, holdings={UpdateId(2, 0)})
        assert ideal_broadcast(pool, [n], 2, P) == 0


class TestTradeExchange:
    def test_satiated_partner_gets_everything(self):
        pool = set(live_updates(5, P))
        partner = NodeState(1, NodeKind.RATIONAL, holdings={UpdateId(5, 0)})
        missing = len(pool) - 1
        res = trade_exchange(pool, partner, True, 5, P)
        assert len(res.given_by_a) == missing
        assert partner.holdings == pool

    def test_isolated_partner_gets_nothing(self):
        pool = set(live_updates(5, P))
        partner = NodeState(1, NodeKind.RATIONAL, holdings=set())
        res = trade_exchange(pool, partner, False, 5, P)
        assert res.given_by_a == frozenset()
        assert partner.holdings == set()

    def test_returns_absorbed_into_pool(self):
        extra = UpdateId(5, 3)
        pool = {UpdateId(5, 0)}
        partner = NodeState(1, NodeKind.RATIONAL, holdings={extra})
        res = trade_exchange(pool, partner, True, 5, P)
        assert extra in pool
        assert res.given_by_b == {extra}

    def test_accept_returns_off(self):
        extra = UpdateId(5, 3)
        pool = {UpdateId(5, 0)}
        partner = NodeState(1, NodeKind.RATIONAL, holdings={extra})
        trade_exchange(pool, partner, True, 5, P, accept_returns=False)
        assert extra not in pool

    def test_fully_satiated_partner(self):
        pool = set(live_updates(5, P))
        partner = NodeState(1, NodeKind.RATIONAL, holdings=set(pool))
        res = trade_exchange(pool, partner, True, 5, P)
        assert res.given_by_a == frozenset() and res.given_by_b == frozenset()


class TestReporting:
    def interaction(self, given, receiver_kind):
        giver = NodeState(0, NodeKind.ATTACKER)
        receiver = NodeState(1, receiver_kind)
        return (giver, receiver, given)

    def test_obedient_receiver_reports_excess(self):
        ledger = ReportLedger.empty()
        reporting = ReportingConfig(enabled=True, service_cap=3, eviction_threshold=2)
        file_excess_service_reports([self.interaction(12, NodeKind.OBEDIENT)], reporting, ledger)
        assert (1, 0) in ledger.pairs

    def test_rational_receiver_does_not_report(self):
        ledger = ReportLedger.empty()
        reporting = ReportingConfig(enabled=True, service_cap=3, eviction_threshold=2)
        file_excess_service_reports([self.interaction(12, NodeKind.RATIONAL)], reporting, ledger)
        assert not ledger.pairs

    def test_under_cap_no_report(self):
        ledger = ReportLedger.empty()
        reporting = ReportingConfig(enabled=True, service_cap=3, eviction_threshold=2)
        file_excess_service_reports([self.interaction(2, NodeKind.OBEDIENT)], reporting, ledger)
        assert not ledger.pairs

    def test_eviction_needs_distinct_reporters(self):
        reporting = ReportingConfig(enabled=True, service_cap=3, eviction_threshold=2)
        ledger = ReportLedger.empty()
        attacker = NodeState(9, NodeKind.ATTACKER)
        r1 = NodeState(1, NodeKind.OBEDIENT)
        # same reporter twice: no eviction
        for _ in range(2):
            evicted = file_excess_service_reports([(attacker, r1, 10)], reporting, ledger)
            assert evicted == []
        assert not attacker.evicted
        # a second distinct reporter tips it over
        r2 = NodeState(2, NodeKind.OBEDIENT)
        evicted = file_excess_service_reports([(attacker, r2, 10)], reporting, ledger)
        assert evicted == [9]
        assert attacker.evicted

    def test_disabled_reporting_is_inert(self):
        ledger = ReportLedger.empty()
        reporting = ReportingConfig(enabled=False)
        out = file_excess_service_reports([self.interaction(50, NodeKind.OBEDIENT)], reporting, ledger)
        assert out == [] and not ledger.pairs
