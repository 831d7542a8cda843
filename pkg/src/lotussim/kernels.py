"""Numba-compiled per-round simulation phases.

Same contracts as :mod:`lotussim.kernels_numpy`, written as explicit loops
so the whole round executes in machine code.  If numba is unavailable the
functions still run as plain Python (slowly); callers should prefer the
numpy backend in that case.  Results are bit-identical to the numpy
backend by construction: same transfer counts, same ascending
(earliest-expiry-first) selection order.
"""

from __future__ import annotations

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a hard dependency
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


K_OBEDIENT = 0
K_RATIONAL = 1
K_ATTACKER = 2

A_NONE = 0
A_CRASH = 1
A_IDEAL = 2
A_TRADE = 3


@njit(cache=True)
def ideal_broadcast_phase(hold, lo, hi, bcast_pool, targeted, kinds, evicted, received):
    placed = 0
    for s in range(hold.shape[0]):
        if targeted[s] and kinds[s] != K_ATTACKER and not evicted[s]:
            new = 0
            for u in range(lo, hi):
                if bcast_pool[u] and not hold[s, u]:
                    hold[s, u] = True
                    new += 1
            received[s] += new
            placed += new
    return placed


@njit(cache=True)
def _trade_dump(
    hold, lo, hi, pool, att, partner, targeted, accept_returns,
    uploaded, received, kinds,
    reporting_on, service_cap, reported_by, reports_filed,
):
    if not targeted[partner]:
        return
    gives = 0
    takes = 0
    for u in range(lo, hi):
        if pool[u]:
            if not hold[partner, u]:
                hold[partner, u] = True
                gives += 1
        elif accept_returns and hold[partner, u]:
            pool[u] = True
            takes += 1
    uploaded[att] += gives
    received[partner] += gives
    uploaded[partner] += takes
    received[att] += takes
    if reporting_on and gives > service_cap and kinds[partner] == K_OBEDIENT:
        reported_by[att, partner] = True
        reports_filed[partner] += 1


@njit(cache=True)
def _all_held(hold, n, a, b):
    for u in range(a, b):
        if not hold[n, u]:
            return False
    return True


@njit(cache=True)
def balanced_phase(
    hold, lo, hi, kinds, evicted, targeted, pool, partners,
    obedient_bonus, attack_kind, accept_returns,
    uploaded, received, junk_up, reports_filed,
    reporting_on, service_cap, reported_by, round_no,
):
    for n in range(hold.shape[0]):
        if evicted[n]:
            continue
        p = partners[n]
        if p < 0:
            continue
        if kinds[n] == K_ATTACKER:
            if attack_kind == A_TRADE and kinds[p] != K_ATTACKER:
                _trade_dump(
                    hold, lo, hi, pool, n, p, targeted, accept_returns,
                    uploaded, received, kinds,
                    reporting_on, service_cap, reported_by, reports_filed,
                )
            continue
        if _all_held(hold, n, lo, hi):
            continue  # satiated honest nodes initiate nothing
        if kinds[p] == K_ATTACKER:
            # Attackers complete nothing they did not initiate; the honest
            # initiator's balanced slot for this round is consumed.
            continue
        n_gives = 0
        p_gives = 0
        for u in range(lo, hi):
            hn = hold[n, u]
            hp = hold[p, u]
            if hn and not hp:
                n_gives += 1
            elif hp and not hn:
                p_gives += 1
        m = min(n_gives, p_gives)
        kn = m
        kp = m
        if obedient_bonus and m >= 1:
            if n_gives > m and kinds[n] == K_OBEDIENT:
                kn += 1
            if p_gives > m and kinds[p] == K_OBEDIENT:
                kp += 1
        done_n = 0
        for u in range(lo, hi):
            if done_n >= kn:
                break
            if hold[n, u] and not hold[p, u]:
                hold[p, u] = True
                done_n += 1
        done_p = 0
        for u in range(lo, hi):
            if done_p >= kp:
                break
            if hold[p, u] and not hold[n, u]:
                hold[n, u] = True
                done_p += 1
        uploaded[n] += kn
        received[p] += kn
        uploaded[p] += kp
        received[n] += kp
        if reporting_on:
            if kn > service_cap and kinds[p] == K_OBEDIENT:
                reported_by[n, p] = True
                reports_filed[p] += 1
            if kp > service_cap and kinds[n] == K_OBEDIENT:
                reported_by[p, n] = True
                reports_filed[n] += 1


@njit(cache=True)
def push_phase(
    hold, lo, hi, cur_lo, offer_lo, need_hi, push_size,
    kinds, evicted, targeted, pool, partners,
    attack_kind, accept_returns,
    uploaded, received, junk_up, reports_filed,
    reporting_on, service_cap, reported_by, round_no,
):
    for n in range(hold.shape[0]):
        if evicted[n]:
            continue
        p = partners[n]
        if p < 0:
            continue
        if kinds[n] == K_ATTACKER:
            # A push moves at most push_size updates, so it is useless for
            # satiation dumping; attackers of every kind sit pushes out.
            continue
        if kinds[n] == K_RATIONAL:
            gate = (cur_lo > lo) and not _all_held(hold, n, lo, cur_lo)
        else:
            gate = not _all_held(hold, n, lo, hi)
        if not gate:
            continue
        if kinds[p] == K_ATTACKER:
            continue  # initiator's push slot is consumed with no transfer
        n_offers = 0
        for u in range(offer_lo, hi):
            if hold[n, u] and not hold[p, u]:
                n_offers += 1
        take = min(push_size, n_offers)
        n_needs = 0
        for u in range(lo, need_hi):
            if hold[p, u] and not hold[n, u]:
                n_needs += 1
        ret = min(take, n_needs)
        junk = take - ret
        done = 0
        for u in range(offer_lo, hi):
            if done >= take:
                break
            if hold[n, u] and not hold[p, u]:
                hold[p, u] = True
                done += 1
        done = 0
        for u in range(lo, need_hi):
            if done >= ret:
                break
            if hold[p, u] and not hold[n, u]:
                hold[n, u] = True
                done += 1
        junk_up[p] += junk
        uploaded[n] += take
        received[p] += take
        uploaded[p] += ret
        received[n] += ret
        if reporting_on:
            if take > service_cap and kinds[p] == K_OBEDIENT:
                reported_by[n, p] = True
                reports_filed[p] += 1
            if ret > service_cap and kinds[n] == K_OBEDIENT:
                reported_by[p, n] = True
                reports_filed[n] += 1
