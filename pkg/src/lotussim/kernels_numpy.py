"""Pure-numpy implementations of the per-round simulation phases.

This is the fallback backend (``LOTUSSIM_BACKEND=numpy``) and the reference
the numba kernels in :mod:`lotussim.kernels` are checked against: for
identical inputs both backends must leave bit-identical state behind.
Holdings are boolean node x update matrices and all work happens on the
window of currently live update ids [lo, hi).

Only this backend supports audit logging of individual interactions.
"""

from __future__ import annotations

import numpy as np

from .audit import ExchangeRecord

K_OBEDIENT = 0
K_RATIONAL = 1
K_ATTACKER = 2

A_NONE = 0
A_CRASH = 1
A_IDEAL = 2
A_TRADE = 3


def ideal_broadcast_phase(hold, lo, hi, bcast_pool, targeted, kinds, evicted, received):
    """Forward coalition broadcaster seeds to every live satiated target.
    Returns the number of placements (attacker uploads)."""
    placed = 0
    win = bcast_pool[lo:hi]
    for s in range(hold.shape[0]):
        if targeted[s] and kinds[s] != K_ATTACKER and not evicted[s]:
            new = np.nonzero(win & ~hold[s, lo:hi])[0]
            if len(new):
                hold[s, lo + new] = True
                received[s] += len(new)
                placed += len(new)
    return placed


def _maybe_report(giver, receiver, gave, kinds, service_cap, reported_by, reports_filed):
    if gave > service_cap and kinds[receiver] == K_OBEDIENT:
        reported_by[giver, receiver] = True
        reports_filed[receiver] += 1


def _trade_dump(
    hold, lo, hi, pool, att, partner, targeted, accept_returns,
    uploaded, received, kinds,
    reporting_on, service_cap, reported_by, reports_filed,
    round_no, phase, initiator, initiator_satiated, log,
):
    """Trade attacker `att` interacting with `partner`: give a satiated
    target every live pooled update it lacks (absorbing its holdings into
    the pool), give an isolated partner nothing."""
    if not targeted[partner]:
        return
    win_pool = pool[lo:hi]
    gives = np.nonzero(win_pool & ~hold[partner, lo:hi])[0]
    takes = np.empty(0, dtype=np.int64)
    if accept_returns:
        takes = np.nonzero(hold[partner, lo:hi] & ~win_pool)[0]
    if len(gives):
        hold[partner, lo + gives] = True
    if len(takes):
        pool[lo + takes] = True
    uploaded[att] += len(gives)
    received[partner] += len(gives)
    uploaded[partner] += len(takes)
    received[att] += len(takes)
    if reporting_on:
        _maybe_report(att, partner, len(gives), kinds, service_cap, reported_by, reports_filed)
    if log is not None:
        give_uids = tuple(int(lo + u) for u in gives)
        take_uids = tuple(int(lo + u) for u in takes)
        if initiator == att:
            by_init, by_resp, resp = give_uids, take_uids, partner
        else:
            by_init, by_resp, resp = take_uids, give_uids, att
        log.append(
            ExchangeRecord(
                round_no, phase, int(initiator), int(resp), by_init, by_resp, 0,
                int(kinds[initiator]), int(kinds[resp]), bool(initiator_satiated),
            )
        )


def balanced_phase(
    hold, lo, hi, kinds, evicted, targeted, pool, partners,
    obedient_bonus, attack_kind, accept_returns,
    uploaded, received, junk_up, reports_filed,
    reporting_on, service_cap, reported_by, round_no, log=None,
):
    """All balanced-exchange initiations of one round, in ascending
    initiator-id order, sequential within the round."""
    for n in range(hold.shape[0]):
        if evicted[n]:
            continue
        p = int(partners[n])
        if p < 0:
            continue
        if kinds[n] == K_ATTACKER:
            if attack_kind == A_TRADE and kinds[p] != K_ATTACKER:
                _trade_dump(
                    hold, lo, hi, pool, n, p, targeted, accept_returns,
                    uploaded, received, kinds,
                    reporting_on, service_cap, reported_by, reports_filed,
                    round_no, "balanced", n, False, log,
                )
            continue
        win_n = hold[n, lo:hi]
        if win_n.all():
            continue  # satiated honest nodes initiate nothing
        if kinds[p] == K_ATTACKER:
            # Attackers complete nothing they did not initiate; the honest
            # initiator's balanced slot for this round is consumed.
            continue
        win_p = hold[p, lo:hi]
        give_n = np.nonzero(win_n & ~win_p)[0]
        give_p = np.nonzero(win_p & ~win_n)[0]
        m = min(len(give_n), len(give_p))
        kn = m
        kp = m
        if obedient_bonus and m >= 1:
            if len(give_n) > m and kinds[n] == K_OBEDIENT:
                kn += 1
            if len(give_p) > m and kinds[p] == K_OBEDIENT:
                kp += 1
        if kn:
            hold[p, lo + give_n[:kn]] = True
        if kp:
            hold[n, lo + give_p[:kp]] = True
        uploaded[n] += kn
        received[p] += kn
        uploaded[p] += kp
        received[n] += kp
        if reporting_on:
            _maybe_report(n, p, kn, kinds, service_cap, reported_by, reports_filed)
            _maybe_report(p, n, kp, kinds, service_cap, reported_by, reports_filed)
        if log is not None:
            log.append(
                ExchangeRecord(
                    round_no, "balanced", n, p,
                    tuple(int(lo + u) for u in give_n[:kn]),
                    tuple(int(lo + u) for u in give_p[:kp]),
                    0, int(kinds[n]), int(kinds[p]), False,
                )
            )


def push_phase(
    hold, lo, hi, cur_lo, offer_lo, need_hi, push_size,
    kinds, evicted, targeted, pool, partners,
    attack_kind, accept_returns,
    uploaded, received, junk_up, reports_filed,
    reporting_on, service_cap, reported_by, round_no, log=None,
):
    """All optimistic-push initiations of one round.  Initiator offers its
    recently released updates; responder takes up to push_size of them and
    pays item-for-item with soon-expiring updates, junk-padding any
    shortfall."""
    for n in range(hold.shape[0]):
        if evicted[n]:
            continue
        p = int(partners[n])
        if p < 0:
            continue
        if kinds[n] == K_ATTACKER:
            # A push moves at most push_size updates, so it is useless for
            # satiation dumping; attackers of every kind sit pushes out.
            continue
        if kinds[n] == K_RATIONAL:
            gate = not hold[n, lo:cur_lo].all() if cur_lo > lo else False
        else:
            gate = not hold[n, lo:hi].all()
        if not gate:
            continue
        if kinds[p] == K_ATTACKER:
            continue  # initiator's push slot is consumed with no transfer
        init_satiated = bool(hold[n, lo:hi].all()) if log is not None else False
        offers = np.nonzero(hold[n, offer_lo:hi] & ~hold[p, offer_lo:hi])[0]
        take = min(push_size, len(offers))
        needs = np.nonzero(hold[p, lo:need_hi] & ~hold[n, lo:need_hi])[0]
        ret = min(take, len(needs))
        junk = take - ret
        if take:
            hold[p, offer_lo + offers[:take]] = True
        if ret:
            hold[n, lo + needs[:ret]] = True
        junk_up[p] += junk
        uploaded[n] += take
        received[p] += take
        uploaded[p] += ret
        received[n] += ret
        if reporting_on:
            _maybe_report(n, p, take, kinds, service_cap, reported_by, reports_filed)
            _maybe_report(p, n, ret, kinds, service_cap, reported_by, reports_filed)
        if log is not None:
            log.append(
                ExchangeRecord(
                    round_no, "push", n, p,
                    tuple(int(offer_lo + u) for u in offers[:take]),
                    tuple(int(lo + u) for u in needs[:ret]),
                    junk, int(kinds[n]), int(kinds[p]), init_satiated,
                )
            )
