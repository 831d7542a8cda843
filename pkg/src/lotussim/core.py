"""Core gossip protocol semantics: update lifecycle, satiation, and the two
exchange primitives (balanced exchange, optimistic push).

Everything here is a pure function over explicit node state, so the same
semantics can be exercised directly in tests and mirrored by the array
kernels used in the simulation engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, NamedTuple


class NodeKind(IntEnum):
    OBEDIENT = 0
    RATIONAL = 1
    ATTACKER = 2


class UpdateId(NamedTuple):
    """One broadcast update: the round it was released plus its index within
    that round.  Sorting UpdateIds sorts earliest-expiry-first with ties
    broken by index, which is the transfer-selection order everywhere."""

    release_round: int
    index: int

    def expiry_round(self, lifetime: int) -> int:
        return self.release_round + lifetime - 1

    def is_live(self, round_no: int, lifetime: int) -> bool:
        return self.release_round <= round_no <= self.expiry_round(lifetime)


@dataclass(frozen=True)
class ProtocolParams:
    """Protocol and dissemination parameters.

    The first five defaults are the reference simulation scale; the window
    parameters control which updates count as recently released / expiring
    soon for optimistic pushes.
    """

    num_nodes: int = 250
    updates_per_round: int = 10
    update_lifetime: int = 10
    copies_seeded: int = 12
    push_size: int = 2
    recent_window: int = 2
    expiring_window: int = 3
    obedient_bonus: bool = False
    usable_threshold: float = 0.93

    def validate(self) -> None:
        if self.num_nodes < 1:
            raise ConfigError("num_nodes must be >= 1")
        if self.updates_per_round < 1:
            raise ConfigError("updates_per_round must be >= 1")
        if self.update_lifetime < 1:
            raise ConfigError("update_lifetime must be >= 1")
        if not 0 < self.copies_seeded <= self.num_nodes:
            raise ConfigError("copies_seeded must be in [1, num_nodes]")
        if self.push_size < 1:
            raise ConfigError("push_size must be >= 1")
        if self.recent_window < 1 or self.expiring_window < 1:
            raise ConfigError("recent_window and expiring_window must be >= 1")
        if not 0 < self.usable_threshold <= 1:
            raise ConfigError("usable_threshold must be in (0, 1]")


class ConfigError(ValueError):
    """Raised for invalid protocol, attack, or run configuration."""


@dataclass
class NodeStats:
    uploaded: int = 0
    received: int = 0
    junk_uploaded: int = 0
    reports_filed: int = 0


@dataclass
class NodeState:
    id: int
    kind: NodeKind
    holdings: set[UpdateId] = field(default_factory=set)
    evicted: bool = False
    stats: NodeStats = field(default_factory=NodeStats)


class ExchangeResult(NamedTuple):
    """Outcome of one pairwise interaction.  For a balanced exchange the
    sides are the two peers; for a push, side a is the initiator and side b
    the responder.  junk_units is valueless payload uploaded by side b."""

    given_by_a: frozenset[UpdateId]
    given_by_b: frozenset[UpdateId]
    junk_units: int


EMPTY_EXCHANGE = ExchangeResult(frozenset(), frozenset(), 0)


def live_updates(round_no: int, params: ProtocolParams) -> set[UpdateId]:
    """All updates whose lifetime covers round_no."""
    if round_no < 0:
        raise ValueError("round must be >= 0")
    first = max(0, round_no - params.update_lifetime + 1)
    return {
        UpdateId(rel, i)
        for rel in range(first, round_no + 1)
        for i in range(params.updates_per_round)
    }


def is_satiated(node: NodeState, round_no: int, params: ProtocolParams) -> bool:
    """True iff the node holds every currently live update.  Expired
    holdings are irrelevant."""
    return live_updates(round_no, params) <= node.holdings


def _wants(receiver: NodeState, giver: NodeState, live: set[UpdateId]) -> list[UpdateId]:
    # Live updates the giver can transfer and the receiver lacks,
    # earliest-expiry-first (ties by index).
    return sorted((giver.holdings & live) - receiver.holdings)


def _transfer(giver: NodeState, receiver: NodeState, updates: Iterable[UpdateId]) -> None:
    for u in updates:
        receiver.holdings.add(u)
        giver.stats.uploaded += 1
        receiver.stats.received += 1


def balanced_exchange(
    a: NodeState, b: NodeState, round_no: int, params: ProtocolParams
) -> ExchangeResult:
    """One-for-one swap of missing live updates between two peers.

    Each side transfers min(|wants_a|, |wants_b|) updates, selected
    earliest-expiry-first from what the other side lacks.  With the
    obedient-bonus variant enabled, an Obedient side whose counterpart
    wants more than the balanced count gives exactly one extra update,
    provided it is itself receiving at least one.
    """
    if a.evicted or b.evicted:
        raise ValueError("evicted nodes participate in no exchanges")
    if a.kind is NodeKind.ATTACKER or b.kind is NodeKind.ATTACKER:
        raise ValueError("attacker exchanges are handled by the adversary")
    live = live_updates(round_no, params)
    wants_a = _wants(a, b, live)  # what a receives, i.e. given by b
    wants_b = _wants(b, a, live)  # what b receives, i.e. given by a
    n = min(len(wants_a), len(wants_b))
    give_a = wants_b[:n]
    give_b = wants_a[:n]
    if params.obedient_bonus and n >= 1:
        if len(wants_b) > n and a.kind is NodeKind.OBEDIENT:
            give_a = wants_b[: n + 1]
        if len(wants_a) > n and b.kind is NodeKind.OBEDIENT:
            give_b = wants_a[: n + 1]
    _transfer(a, b, give_a)
    _transfer(b, a, give_b)
    return ExchangeResult(frozenset(give_a), frozenset(give_b), 0)


def should_initiate_push(node: NodeState, round_no: int, params: ProtocolParams) -> bool:
    """Push-initiation gate.  Rational nodes push only when missing an
    update from an earlier round; obedient nodes push whenever anything
    live is missing."""
    if node.kind is NodeKind.ATTACKER:
        raise ValueError("attacker push behaviour is handled by the adversary")
    missing = live_updates(round_no, params) - node.holdings
    if node.kind is NodeKind.RATIONAL:
        return any(u.release_round < round_no for u in missing)
    return bool(missing)


def optimistic_push(
    initiator: NodeState, responder: NodeState, round_no: int, params: ProtocolParams
) -> ExchangeResult:
    """Initiator offers recently released updates; responder takes up to
    push_size of them and pays item-for-item with soon-expiring updates the
    initiator is missing, padding any shortfall with junk units."""
    if initiator.evicted or responder.evicted:
        raise ValueError("evicted nodes participate in no exchanges")
    live = live_updates(round_no, params)
    offers = sorted(
        u
        for u in initiator.holdings & live
        if round_no - u.release_round < params.recent_window
        and u not in responder.holdings
    )
    needs = sorted(
        u
        for u in responder.holdings & live
        if u not in initiator.holdings
        and u.expiry_round(params.update_lifetime) - round_no < params.expiring_window
    )
    taken = offers[: params.push_size]
    returned = needs[: len(taken)]
    junk = len(taken) - len(returned)
    _transfer(initiator, responder, taken)
    _transfer(responder, initiator, returned)
    responder.stats.junk_uploaded += junk
    return ExchangeResult(frozenset(taken), frozenset(returned), junk)


def round_half_up(x: float) -> int:
    """Fractional node counts round half away from zero (for x >= 0)."""
    return int(math.floor(x + 0.5))
