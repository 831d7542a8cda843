"""Attack strategies against the gossip protocol and the excess-service
reporting defense.

Three adversaries are modelled, all controlling a colluding set of nodes
that pools everything it knows:

* crash      -- attacker nodes provide no service at all (baseline);
* ideal      -- attackers instantly forward every broadcaster-seeded update
                they receive to every node in the satiated set, and
                otherwise behave like crash;
* trade      -- attackers give a satiated partner every live update it
                lacks, but only inside normal protocol interactions, and
                give isolated partners nothing.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Sequence

import numpy as np

from .core import (
    EMPTY_EXCHANGE,
    ConfigError,
    ExchangeResult,
    NodeState,
    ProtocolParams,
    UpdateId,
    live_updates,
    round_half_up,
)


class AttackKind(IntEnum):
    NONE = 0
    CRASH = 1
    IDEAL = 2
    TRADE = 3


ATTACK_NAMES = {
    AttackKind.NONE: "none",
    AttackKind.CRASH: "crash",
    AttackKind.IDEAL: "ideal",
    AttackKind.TRADE: "trade",
}
ATTACK_BY_NAME = {v: k for k, v in ATTACK_NAMES.items()}


@dataclass(frozen=True)
class AttackConfig:
    kind: AttackKind = AttackKind.NONE
    attacker_frac: float = 0.0
    satiate_frac: float = 0.70
    rotation_interval: int | None = None
    # Trade attackers also absorb their partners' updates into the pool.
    accept_returns: bool = True

    def validate(self) -> None:
        if not 0.0 <= self.attacker_frac <= 1.0:
            raise ConfigError("attacker_frac must be in [0, 1]")
        if not 0.0 <= self.satiate_frac <= 1.0:
            raise ConfigError("satiate_frac must be in [0, 1]")
        if self.kind is AttackKind.NONE and self.attacker_frac > 0:
            raise ConfigError("attacker_frac must be 0 when no attack is configured")
        if self.rotation_interval is not None and self.rotation_interval < 1:
            raise ConfigError("rotation_interval must be >= 1")

    def num_attackers(self, num_nodes: int) -> int:
        return round_half_up(self.attacker_frac * num_nodes)

    def satiated_size(self, num_nodes: int) -> int:
        return max(
            round_half_up(self.satiate_frac * num_nodes), self.num_attackers(num_nodes)
        )


@dataclass(frozen=True)
class ReportingConfig:
    enabled: bool = False
    service_cap: int = 10
    eviction_threshold: int = 3

    def validate(self) -> None:
        if self.enabled and self.service_cap < 1:
            raise ConfigError("service_cap must be >= 1")
        if self.enabled and self.eviction_threshold < 1:
            raise ConfigError("eviction_threshold must be >= 1")


def choose_satiated_set(
    node_ids: Sequence[int],
    attacker_ids: Sequence[int],
    config: AttackConfig,
    rng: np.random.Generator,
) -> frozenset[int]:
    """The attacker's target group: all attacker nodes plus a random
    selection of honest nodes up to the configured satiated-set size."""
    config.validate()
    if config.kind is AttackKind.NONE:
        return frozenset()
    attackers = frozenset(attacker_ids)
    size = config.satiated_size(len(node_ids))
    n_honest = size - len(attackers)
    if n_honest <= 0:
        return attackers
    honest = np.array(sorted(set(node_ids) - attackers), dtype=np.int64)
    picked = rng.choice(honest, size=min(n_honest, len(honest)), replace=False)
    return attackers | frozenset(int(i) for i in picked)


def crash_exchange() -> ExchangeResult:
    """A crash attacker completes nothing; the partner's slot is consumed."""
    return EMPTY_EXCHANGE


def ideal_broadcast(
    broadcast_pool: set[UpdateId],
    satiated_nodes: Sequence[NodeState],
    round_no: int,
    params: ProtocolParams,
) -> int:
    """Forward every broadcaster-seeded update the coalition holds to every
    satiated node.  Returns the number of placements made."""
    live_pool = broadcast_pool & live_updates(round_no, params)
    placed = 0
    for node in satiated_nodes:
        new = live_pool - node.holdings
        node.holdings |= new
        node.stats.received += len(new)
        placed += len(new)
    return placed


def trade_exchange(
    pool: set[UpdateId],
    partner: NodeState,
    partner_satiated_target: bool,
    round_no: int,
    params: ProtocolParams,
    accept_returns: bool = True,
) -> ExchangeResult:
    """Trade-attacker behaviour in any protocol interaction: dump every
    live pooled update a satiated partner lacks (and absorb the partner's
    holdings into the pool), give an isolated partner nothing."""
    if not partner_satiated_target:
        return crash_exchange()
    live = live_updates(round_no, params)
    given = frozenset((pool & live) - partner.holdings)
    partner.holdings |= given
    partner.stats.received += len(given)
    returned: frozenset[UpdateId] = frozenset()
    if accept_returns:
        returned = frozenset((partner.holdings & live) - pool)
        pool |= returned
        partner.stats.uploaded += len(returned)
    return ExchangeResult(given, returned, 0)


@dataclass
class ReportLedger:
    """Distinct (reporter, reported) pairs plus filing counts, with
    eviction once a node is reported by eviction_threshold distinct
    reporters."""

    pairs: set[tuple[int, int]]
    filings: dict[int, int]

    @classmethod
    def empty(cls) -> "ReportLedger":
        return cls(pairs=set(), filings={})

    def distinct_reporters(self, reported: int) -> int:
        return sum(1 for _, rep in self.pairs if rep == reported)


def file_excess_service_reports(
    interactions: Sequence[tuple[NodeState, NodeState, int]],
    reporting: ReportingConfig,
    ledger: ReportLedger,
) -> list[int]:
    """Process one round of (giver, receiver, updates_given) interaction
    records.  Obedient receivers report any giver that exceeded the service
    cap; returns ids newly evicted this round."""
    if not reporting.enabled:
        return []
    from .core import NodeKind

    states: dict[int, NodeState] = {}
    for giver, receiver, given in interactions:
        states[giver.id] = giver
        states[receiver.id] = receiver
        if given > reporting.service_cap and receiver.kind is NodeKind.OBEDIENT:
            ledger.pairs.add((receiver.id, giver.id))
            ledger.filings[receiver.id] = ledger.filings.get(receiver.id, 0) + 1
            receiver.stats.reports_filed += 1
    evicted = []
    for node_id, state in states.items():
        if state.evicted:
            continue
        if ledger.distinct_reporters(node_id) >= reporting.eviction_threshold:
            state.evicted = True
            evicted.append(node_id)
    return sorted(evicted)
