"""Deterministic round-based simulation engine.

Each round executes in a fixed order: broadcaster seeding, the ideal
attacker's out-of-band broadcast (if configured), all balanced-exchange
initiations in ascending initiator id, all optimistic-push initiations,
then reporting/evictions.  Later exchanges within a round see earlier
transfers.  All randomness comes from per-purpose streams derived from the
master seed by domain separation, so a run is a pure function of its
configuration.

State is kept as boolean node x update matrices; the per-round phases are
executed by one of two interchangeable backends (numba kernels or pure
numpy), selected per call or via the LOTUSSIM_BACKEND environment
variable.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import kernels, kernels_numpy
from .adversary import AttackConfig, AttackKind, ReportingConfig, choose_satiated_set
from .core import ConfigError, NodeKind, ProtocolParams, round_half_up

# Domain tags for per-purpose RNG streams.
STREAM_SEEDING = 1
STREAM_MATCHING = 2
STREAM_SATIATE = 3
STREAM_KINDS = 4

BACKENDS = ("numba", "numpy")


def _stream(master_seed: int, domain: int, *key: int) -> np.random.Generator:
    seq = np.random.SeedSequence((master_seed, domain) + key)
    return np.random.Generator(np.random.PCG64(seq))


def resolve_backend(backend: str | None = None):
    """Pick the kernel module: explicit argument, then LOTUSSIM_BACKEND,
    then numba when available."""
    if backend is None:
        backend = os.environ.get("LOTUSSIM_BACKEND")
    if backend is None:
        backend = "numba" if kernels.NUMBA_AVAILABLE else "numpy"
    if backend not in BACKENDS:
        raise ConfigError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    if backend == "numba" and not kernels.NUMBA_AVAILABLE:
        raise ConfigError("numba backend requested but numba is not importable")
    return kernels if backend == "numba" else kernels_numpy


@dataclass(frozen=True)
class SimConfig:
    params: ProtocolParams = ProtocolParams()
    attack: AttackConfig = AttackConfig()
    reporting: ReportingConfig = ReportingConfig()
    obedient_frac: float = 0.5
    total_rounds: int = 500
    warmup_rounds: int = 20
    master_seed: int = 0

    def validate(self) -> None:
        self.params.validate()
        self.attack.validate()
        self.reporting.validate()
        if not 0.0 <= self.obedient_frac <= 1.0:
            raise ConfigError("obedient_frac must be in [0, 1]")
        if self.total_rounds < 1:
            raise ConfigError("total_rounds must be >= 1")
        if not 0 <= self.warmup_rounds < self.total_rounds:
            raise ConfigError("warmup_rounds must be in [0, total_rounds)")
        if self.warmup_rounds > self.total_rounds - self.params.update_lifetime:
            raise ConfigError(
                "no counted updates: need warmup_rounds <= total_rounds - update_lifetime"
            )
        if self.master_seed < 0:
            raise ConfigError("master_seed must be >= 0")


@dataclass(frozen=True)
class GroupMetrics:
    n_nodes: int
    mean_delivery: float | None
    usable_frac: float | None
    uploads_per_node_round: float | None
    junk_units: int
    reports_filed: int
    evictions: int


@dataclass(frozen=True)
class SimReport:
    isolated: GroupMetrics
    satiated_honest: GroupMetrics
    attacker: GroupMetrics
    counted_first_round: int
    counted_last_round: int
    # Per counted release round: (isolated, satiated-honest, attacker)
    # mean fraction of that round's updates delivered.  None for empty groups.
    delivery_series: tuple[tuple[float | None, float | None, float | None], ...]
    total_seed_placements: int
    total_uploads: int
    total_receives: int
    total_junk_units: int
    total_reports: int
    total_evictions: int


@dataclass
class SimState:
    """Mutable run state; owned by exactly one simulation."""

    config: SimConfig
    round_no: int
    hold: np.ndarray  # bool (N, U)
    pool: np.ndarray  # bool (U,): trade coalition knowledge
    bcast_pool: np.ndarray  # bool (U,): broadcaster seeds landed on attackers
    kinds: np.ndarray  # int8 (N,)
    targeted: np.ndarray  # bool (N,): current satiated set
    initial_targeted: np.ndarray
    evicted: np.ndarray  # bool (N,)
    uploaded: np.ndarray  # int64 (N,)
    received: np.ndarray
    junk_up: np.ndarray
    reports_filed: np.ndarray
    reported_by: np.ndarray  # bool (N, N): [reported, reporter]
    ideal_uploads: int = 0
    total_seed_placements: int = 0
    sat_epoch: int = 0


def assign_kinds(config: SimConfig) -> np.ndarray:
    """Node kinds as an int8 array: attackers first from a seeded
    permutation, then the obedient share of the honest remainder."""
    n = config.params.num_nodes
    rng = _stream(config.master_seed, STREAM_KINDS)
    perm = rng.permutation(n)
    n_att = config.attack.num_attackers(n)
    n_ob = round_half_up(config.obedient_frac * (n - n_att))
    kinds = np.full(n, NodeKind.RATIONAL, dtype=np.int8)
    kinds[perm[:n_att]] = NodeKind.ATTACKER
    kinds[perm[n_att : n_att + n_ob]] = NodeKind.OBEDIENT
    return kinds


def _draw_targets(config: SimConfig, kinds: np.ndarray, epoch: int) -> np.ndarray:
    n = config.params.num_nodes
    attacker_ids = np.nonzero(kinds == NodeKind.ATTACKER)[0]
    rng = _stream(config.master_seed, STREAM_SATIATE, epoch)
    chosen = choose_satiated_set(range(n), [int(i) for i in attacker_ids], config.attack, rng)
    targeted = np.zeros(n, dtype=np.bool_)
    if chosen:
        targeted[sorted(chosen)] = True
    return targeted


def init_state(config: SimConfig) -> SimState:
    config.validate()
    n = config.params.num_nodes
    u = config.total_rounds * config.params.updates_per_round
    kinds = assign_kinds(config)
    targeted = _draw_targets(config, kinds, epoch=0)
    return SimState(
        config=config,
        round_no=0,
        hold=np.zeros((n, u), dtype=np.bool_),
        pool=np.zeros(u, dtype=np.bool_),
        bcast_pool=np.zeros(u, dtype=np.bool_),
        kinds=kinds,
        targeted=targeted,
        initial_targeted=targeted.copy(),
        evicted=np.zeros(n, dtype=np.bool_),
        uploaded=np.zeros(n, dtype=np.int64),
        received=np.zeros(n, dtype=np.int64),
        junk_up=np.zeros(n, dtype=np.int64),
        reports_filed=np.zeros(n, dtype=np.int64),
        reported_by=np.zeros((n, n), dtype=np.bool_),
    )


def seed_round(
    round_no: int,
    params: ProtocolParams,
    rng: np.random.Generator,
    eligible_ids: np.ndarray,
) -> np.ndarray:
    """Broadcaster seeding for one round: for each new update, a uniform
    subset of copies_seeded distinct eligible nodes.  Returns an
    (updates_per_round, k) array of recipient node ids."""
    m = len(eligible_ids)
    k = min(params.copies_seeded, m)
    if k == 0:
        return np.empty((params.updates_per_round, 0), dtype=np.int64)
    keys = rng.random((params.updates_per_round, m))
    if k == m:
        idx = np.tile(np.arange(m), (params.updates_per_round, 1))
    else:
        idx = np.argpartition(keys, k - 1, axis=1)[:, :k]
    return np.asarray(eligible_ids, dtype=np.int64)[idx]


def match_partners(
    round_no: int,
    live_ids: np.ndarray,
    master_seed: int,
    num_nodes: int,
) -> np.ndarray:
    """Per-round partner table: row 0 balanced, row 1 push.  Each entry is
    uniform over live nodes excluding the initiator; -1 marks no partner
    (evicted initiator or fewer than two live nodes)."""
    partners = np.full((2, num_nodes), -1, dtype=np.int64)
    m = len(live_ids)
    if m < 2:
        return partners
    rng = _stream(master_seed, STREAM_MATCHING, round_no)
    draws = rng.integers(0, m - 1, size=(2, num_nodes))
    live = np.asarray(live_ids, dtype=np.int64)
    pos = np.arange(m)
    for tag in (0, 1):
        k = draws[tag, live]
        partners[tag, live] = live[k + (k >= pos)]
    return partners


def _window(round_no: int, params: ProtocolParams) -> tuple[int, int, int, int, int]:
    upr = params.updates_per_round
    lo = max(0, round_no - params.update_lifetime + 1) * upr
    hi = (round_no + 1) * upr
    cur_lo = round_no * upr
    offer_lo = max(lo, (round_no - params.recent_window + 1) * upr)
    need_hi = max(lo, min(hi, (round_no - params.update_lifetime + 1 + params.expiring_window) * upr))
    return lo, hi, cur_lo, offer_lo, need_hi


def step_round(state: SimState, backend_module, audit: list | None = None) -> SimState:
    """Advance the simulation by one round (mutates and returns state)."""
    config = state.config
    params = config.params
    r = state.round_no
    if r >= config.total_rounds:
        raise ValueError("run is already complete")
    attack = config.attack

    if attack.rotation_interval is not None and attack.kind is not AttackKind.NONE:
        epoch = r // attack.rotation_interval
        if epoch != state.sat_epoch:
            state.targeted = _draw_targets(config, state.kinds, epoch)
            state.sat_epoch = epoch

    eligible = np.nonzero(~state.evicted)[0]
    placements = seed_round(r, params, _stream(config.master_seed, STREAM_SEEDING, r), eligible)
    upr = params.updates_per_round
    is_attacker = state.kinds == NodeKind.ATTACKER
    for j in range(upr):
        uid = r * upr + j
        recipients = placements[j]
        if len(recipients) == 0:
            continue
        state.hold[recipients, uid] = True
        state.received[recipients] += 1
        if is_attacker[recipients].any():
            state.bcast_pool[uid] = True
            state.pool[uid] = True
        state.total_seed_placements += len(recipients)

    lo, hi, cur_lo, offer_lo, need_hi = _window(r, params)

    if attack.kind is AttackKind.IDEAL:
        state.ideal_uploads += int(
            backend_module.ideal_broadcast_phase(
                state.hold, lo, hi, state.bcast_pool, state.targeted,
                state.kinds, state.evicted, state.received,
            )
        )

    partners = match_partners(r, eligible, config.master_seed, params.num_nodes)

    reporting = config.reporting
    bal_args = (
        state.hold, lo, hi, state.kinds, state.evicted, state.targeted, state.pool,
        partners[0], params.obedient_bonus, int(attack.kind),
        attack.accept_returns, state.uploaded, state.received, state.junk_up,
        state.reports_filed, reporting.enabled, reporting.service_cap,
        state.reported_by, r,
    )
    push_args = (
        state.hold, lo, hi, cur_lo, offer_lo, need_hi, params.push_size,
        state.kinds, state.evicted, state.targeted, state.pool,
        partners[1], int(attack.kind), attack.accept_returns,
        state.uploaded, state.received, state.junk_up, state.reports_filed,
        reporting.enabled, reporting.service_cap, state.reported_by, r,
    )
    if audit is not None:
        kernels_numpy.balanced_phase(*bal_args, log=audit)
        kernels_numpy.push_phase(*push_args, log=audit)
    else:
        backend_module.balanced_phase(*bal_args)
        backend_module.push_phase(*push_args)

    if config.reporting.enabled:
        newly = (
            state.reported_by.sum(axis=1) >= config.reporting.eviction_threshold
        ) & ~state.evicted
        state.evicted |= newly

    state.round_no = r + 1
    return state


def _group_metrics(
    mask: np.ndarray,
    delivery: np.ndarray,
    state: SimState,
    extra_uploads: int = 0,
) -> GroupMetrics:
    n_group = int(mask.sum())
    if n_group == 0:
        return GroupMetrics(0, None, None, None, 0, 0, 0)
    threshold = state.config.params.usable_threshold
    uploads = int(state.uploaded[mask].sum()) + extra_uploads
    return GroupMetrics(
        n_nodes=n_group,
        mean_delivery=float(delivery[mask].mean()),
        usable_frac=float((delivery[mask] >= threshold).mean()),
        uploads_per_node_round=uploads / (n_group * state.config.total_rounds),
        junk_units=int(state.junk_up[mask].sum()),
        reports_filed=int(state.reports_filed[mask].sum()),
        evictions=int(state.evicted[mask].sum()),
    )


def build_report(state: SimState) -> SimReport:
    config = state.config
    params = config.params
    upr = params.updates_per_round
    first = config.warmup_rounds
    last = config.total_rounds - params.update_lifetime
    c0, c1 = first * upr, (last + 1) * upr
    n_rounds = last - first + 1

    counted = state.hold[:, c0:c1]
    is_attacker = state.kinds == NodeKind.ATTACKER
    sat_honest = state.initial_targeted & ~is_attacker
    isolated = ~state.initial_targeted & ~is_attacker

    delivery = counted.sum(axis=1) / (n_rounds * upr)
    # The coalition pools knowledge, so every attacker node is credited
    # with the union of everything any of them obtained.
    coalition = state.pool[c0:c1] | state.bcast_pool[c0:c1]
    if is_attacker.any():
        coalition = coalition | counted[is_attacker].any(axis=0)
    delivery[is_attacker] = coalition.sum() / (n_rounds * upr)

    per_round = counted.reshape(params.num_nodes, n_rounds, upr).mean(axis=2)
    coal_round = coalition.reshape(n_rounds, upr).mean(axis=1)

    def series_for(mask: np.ndarray) -> np.ndarray | None:
        if not mask.any():
            return None
        return per_round[mask].mean(axis=0)

    iso_series = series_for(isolated)
    sat_series = series_for(sat_honest)
    att_series = coal_round if is_attacker.any() else None
    series = tuple(
        (
            float(iso_series[i]) if iso_series is not None else None,
            float(sat_series[i]) if sat_series is not None else None,
            float(att_series[i]) if att_series is not None else None,
        )
        for i in range(n_rounds)
    )

    return SimReport(
        isolated=_group_metrics(isolated, delivery, state),
        satiated_honest=_group_metrics(sat_honest, delivery, state),
        attacker=_group_metrics(is_attacker, delivery, state, extra_uploads=state.ideal_uploads),
        counted_first_round=first,
        counted_last_round=last,
        delivery_series=series,
        total_seed_placements=state.total_seed_placements,
        total_uploads=int(state.uploaded.sum()) + state.ideal_uploads,
        total_receives=int(state.received.sum()),
        total_junk_units=int(state.junk_up.sum()),
        total_reports=int(state.reports_filed.sum()),
        total_evictions=int(state.evicted.sum()),
    )


def run(
    config: SimConfig,
    backend: str | None = None,
    audit: list | None = None,
) -> SimReport:
    """Execute a full simulation.  Identical config (and backend-independent
    by construction) implies an identical report.  Passing an audit list
    forces the numpy backend and fills it with ExchangeRecords."""
    state = init_state(config)
    module = kernels_numpy if audit is not None else resolve_backend(backend)
    for _ in range(config.total_rounds):
        step_round(state, module, audit)
    return build_report(state)
