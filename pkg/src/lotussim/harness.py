"""Experiment harness: attacker-fraction sweeps, usability-threshold
search, the analytic seeding-coverage cross-check, and CSV emission.

The quantity searched and plotted is the isolated group's mean delivery
fraction; the fraction of isolated nodes above the usability threshold is
carried alongside in every row so either metric can be consumed.
"""

from __future__ import annotations

import dataclasses
import math
import sys
import warnings
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .adversary import ATTACK_NAMES, AttackKind
from .core import ConfigError
from .engine import SimConfig, SimReport, run


@dataclass(frozen=True)
class SweepRow:
    attack: str
    attacker_frac: float
    push_size: int
    obedient_bonus: bool
    seed: int
    isolated_mean_delivery: float | None
    isolated_usable_frac: float | None
    satiated_mean_delivery: float | None
    attacker_upload_per_round: float | None
    junk_units: int
    evictions: int
    error: str = ""


@dataclass(frozen=True)
class SweepSpec:
    base: SimConfig
    attacks: tuple[AttackKind, ...]
    fractions: tuple[float, ...]
    seeds: tuple[int, ...]

    def validate(self) -> None:
        if not self.attacks or not self.fractions or not self.seeds:
            raise ConfigError("sweep needs at least one attack, fraction, and seed")


def frange(lo: float, hi: float, step: float) -> tuple[float, ...]:
    """Inclusive float grid, rounded to step precision to keep labels tidy."""
    if step <= 0:
        raise ConfigError("step must be > 0")
    count = int(round((hi - lo) / step))
    return tuple(round(lo + i * step, 10) for i in range(count + 1) if lo + i * step <= hi + 1e-12)


def point_config(base: SimConfig, kind: AttackKind, frac: float, seed: int) -> SimConfig:
    attack = replace(base.attack, kind=kind, attacker_frac=frac if kind is not AttackKind.NONE else 0.0)
    return replace(base, attack=attack, master_seed=seed)


def _row_from_report(
    kind: AttackKind, frac: float, seed: int, config: SimConfig, report: SimReport
) -> SweepRow:
    return SweepRow(
        attack=ATTACK_NAMES[kind],
        attacker_frac=frac,
        push_size=config.params.push_size,
        obedient_bonus=config.params.obedient_bonus,
        seed=seed,
        isolated_mean_delivery=report.isolated.mean_delivery,
        isolated_usable_frac=report.isolated.usable_frac,
        satiated_mean_delivery=report.satiated_honest.mean_delivery,
        attacker_upload_per_round=report.attacker.uploads_per_node_round,
        junk_units=report.total_junk_units,
        evictions=report.total_evictions,
    )


def sweep(
    spec: SweepSpec,
    run_fn: Callable[[SimConfig], SimReport] = run,
) -> list[SweepRow]:
    """Run every (attack x fraction x seed) point.  Rows come back in that
    deterministic nesting order; per-point failures are recorded in the
    row's error field instead of aborting the sweep."""
    spec.validate()
    rows: list[SweepRow] = []
    for kind in spec.attacks:
        for frac in spec.fractions:
            for seed in spec.seeds:
                config = point_config(spec.base, kind, frac, seed)
                try:
                    report = run_fn(config)
                except ConfigError as exc:
                    rows.append(
                        SweepRow(
                            attack=ATTACK_NAMES[kind],
                            attacker_frac=frac,
                            push_size=spec.base.params.push_size,
                            obedient_bonus=spec.base.params.obedient_bonus,
                            seed=seed,
                            isolated_mean_delivery=None,
                            isolated_usable_frac=None,
                            satiated_mean_delivery=None,
                            attacker_upload_per_round=None,
                            junk_units=0,
                            evictions=0,
                            error=str(exc),
                        )
                    )
                    continue
                rows.append(_row_from_report(kind, frac, seed, config, report))
    return rows


@dataclass(frozen=True)
class ThresholdResult:
    attack: str
    threshold: float  # nan when delivery never falls below target in range
    target: float
    resolution: float
    seeds: tuple[int, ...]
    used_grid_fallback: bool
    noise_warning: bool
    curve: tuple[tuple[float, float], ...]  # (fraction, mean isolated delivery)


def find_threshold(
    base: SimConfig,
    kind: AttackKind,
    seeds: Sequence[int] = (0, 1, 2, 3, 4),
    target: float = 0.93,
    resolution: float = 0.01,
    frac_lo: float = 0.0,
    frac_hi: float = 0.6,
    prescan_step: float = 0.05,
    noise_allowance: float = 0.02,
    run_fn: Callable[[SimConfig], SimReport] = run,
) -> ThresholdResult:
    """Smallest attacker fraction (to the given resolution) at which the
    isolated group's mean delivery over the seed panel drops below target.

    A coarse pre-scan checks that delivery is empirically nonincreasing;
    when it is, the crossing bracket is refined by bisection.  If the
    pre-scan is non-monotone beyond the noise allowance, the whole range
    is scanned at the resolution instead and the first crossing is
    reported with a noise warning.
    """
    if kind is AttackKind.NONE:
        raise ConfigError("threshold search needs an attack kind")
    if not seeds:
        raise ConfigError("at least one seed required")
    cache: dict[float, float] = {}

    def mean_delivery(frac: float) -> float:
        frac = round(frac, 10)
        if frac not in cache:
            values = []
            for seed in seeds:
                report = run_fn(point_config(base, kind, frac, seed))
                value = report.isolated.mean_delivery
                if value is None:
                    raise ConfigError("isolated group is empty; cannot search threshold")
                values.append(value)
            cache[frac] = float(np.mean(values))
        return cache[frac]

    grid = frange(frac_lo, frac_hi, prescan_step)
    scan = [(f, mean_delivery(f)) for f in grid]
    monotone = all(
        scan[i + 1][1] <= scan[i][1] + noise_allowance for i in range(len(scan) - 1)
    )

    crossing = next((i for i, (_, d) in enumerate(scan) if d < target), None)
    if crossing is None:
        return ThresholdResult(
            ATTACK_NAMES[kind], math.nan, target, resolution, tuple(seeds),
            used_grid_fallback=not monotone, noise_warning=not monotone,
            curve=tuple(sorted(cache.items())),
        )

    if not monotone:
        warnings.warn("delivery curve is not monotone; falling back to grid scan")
        for frac in frange(frac_lo, frac_hi, resolution):
            if mean_delivery(frac) < target:
                return ThresholdResult(
                    ATTACK_NAMES[kind], frac, target, resolution,
                    tuple(seeds), used_grid_fallback=True, noise_warning=True,
                    curve=tuple(sorted(cache.items())),
                )
        return ThresholdResult(
            ATTACK_NAMES[kind], math.nan, target, resolution, tuple(seeds),
            used_grid_fallback=True, noise_warning=True,
            curve=tuple(sorted(cache.items())),
        )

    if crossing == 0:
        lo, hi = frac_lo, frac_lo
    else:
        lo, hi = scan[crossing - 1][0], scan[crossing][0]
    while hi - lo > resolution + 1e-12:
        mid = round((lo + hi) / 2, 10)
        if mean_delivery(mid) < target:
            hi = mid
        else:
            lo = mid
    return ThresholdResult(
        ATTACK_NAMES[kind], hi, target, resolution, tuple(seeds),
        used_grid_fallback=False, noise_warning=False,
        curve=tuple(sorted(cache.items())),
    )


def analytic_seed_coverage(num_nodes: int, coalition_size: int, copies_seeded: int) -> float:
    """Probability that a fresh update is seeded to at least one member of
    a coalition: 1 - C(n - m, k) / C(n, k), evaluated as a running product
    so no large factorials appear."""
    if num_nodes < 1 or coalition_size < 0 or copies_seeded < 0:
        raise ConfigError("sizes must be nonnegative (num_nodes >= 1)")
    if coalition_size > num_nodes or copies_seeded > num_nodes:
        raise ConfigError("coalition and seeded copies cannot exceed num_nodes")
    if copies_seeded > num_nodes - coalition_size:
        return 1.0
    miss = 1.0
    for i in range(copies_seeded):
        miss *= (num_nodes - coalition_size - i) / (num_nodes - i)
    return 1.0 - miss


def format_value(value) -> str:
    """CSV cell formatting: floats at 6 significant digits (IEEE
    round-half-even, 'nan' for missing), bools as 0/1."""
    if value is None:
        return "nan"
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def emit_csv(rows: Sequence[SweepRow], destination) -> None:
    """Header plus one line per row, RFC-4180-style quoting, '\\n' line
    ends, byte-identical for identical inputs.  destination is a path or a
    text stream ('-' means stdout)."""
    if not rows:
        raise ValueError("no rows to emit")
    import csv

    def write(stream) -> None:
        writer = csv.writer(stream, lineterminator="\n")
        fields = [f.name for f in dataclasses.fields(SweepRow)]
        writer.writerow(fields)
        for row in rows:
            writer.writerow([format_value(getattr(row, name)) for name in fields])

    if destination == "-":
        write(sys.stdout)
    elif isinstance(destination, (str, bytes)) or hasattr(destination, "__fspath__"):
        with open(destination, "w", newline="") as fh:
            write(fh)
    else:
        write(destination)
