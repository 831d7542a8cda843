"""Per-interaction records, collected only on the numpy backend when a run
is asked to audit itself.  Tests use these to assert protocol invariants
(exchange parity, push bounds, satiation-compatibility, ...) over whole
runs."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ExchangeRecord:
    round_no: int
    phase: str  # "balanced" or "push"
    initiator: int
    responder: int
    given_by_initiator: tuple[int, ...]  # global update ids
    given_by_responder: tuple[int, ...]
    junk_units: int
    initiator_kind: int
    responder_kind: int
    initiator_satiated: bool
