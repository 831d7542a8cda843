"""Command-line interface: single runs, attacker-fraction sweeps,
usability-threshold searches, abstract-model experiments, and the analytic
seeding-coverage check.

Exit status: 0 on success, 1 on usage/configuration errors, 2 on runtime
errors.  Tabular results are CSV (with the invoking flags echoed in a
leading comment line); threshold and coverage print a single scalar line.
"""

from __future__ import annotations

import argparse
import csv
import shlex
import sys

import numpy as np

from .adversary import ATTACK_BY_NAME, AttackConfig, AttackKind, ReportingConfig
from .core import ConfigError, ProtocolParams
from .engine import SimConfig, run
from .harness import (
    SweepSpec,
    analytic_seed_coverage,
    emit_csv,
    find_threshold,
    format_value,
    frange,
    sweep,
)
from . import model as abstract_model


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; the contract is 1
        raise _UsageError(message)


def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--attack", default="none",
                   help="attack kind: none|crash|ideal|trade (default none)")
    p.add_argument("--attacker-frac", type=float, default=0.0,
                   help="fraction of nodes the attacker controls (default 0)")
    p.add_argument("--satiate-frac", type=float, default=0.70,
                   help="fraction of the system the attacker targets (default 0.70)")
    p.add_argument("--rotation-interval", type=int, default=None,
                   help="re-draw the honest satiation targets every K rounds")
    p.add_argument("--nodes", type=int, default=250, help="number of nodes (default 250)")
    p.add_argument("--updates-per-round", type=int, default=10,
                   help="updates released per round (default 10)")
    p.add_argument("--lifetime", type=int, default=10,
                   help="update lifetime in rounds (default 10)")
    p.add_argument("--copies-seeded", type=int, default=12,
                   help="broadcaster copies per update (default 12)")
    p.add_argument("--push-size", type=int, default=2,
                   help="max updates taken in one optimistic push (default 2)")
    p.add_argument("--recent-window", type=int, default=2,
                   help="rounds an update counts as recently released (default 2)")
    p.add_argument("--expiring-window", type=int, default=3,
                   help="rounds-to-expiry counted as expiring soon (default 3)")
    p.add_argument("--obedient-bonus", action="store_true",
                   help="obedient nodes give one extra update per balanced exchange")
    p.add_argument("--obedient-frac", type=float, default=0.5,
                   help="fraction of honest nodes that are obedient (default 0.5)")
    p.add_argument("--reporting-cap", type=int, default=None,
                   help="enable excess-service reporting with this per-interaction cap")
    p.add_argument("--reporting-threshold", type=int, default=3,
                   help="distinct reporters needed to evict a node (default 3)")
    p.add_argument("--rounds", type=int, default=500, help="simulated rounds (default 500)")
    p.add_argument("--warmup", type=int, default=20,
                   help="release rounds excluded from metrics (default 20)")
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")


def _attack_kind(name: str) -> AttackKind:
    try:
        return ATTACK_BY_NAME[name]
    except KeyError:
        raise ConfigError(f"--attack must be one of {sorted(ATTACK_BY_NAME)}, got {name!r}")


def _sim_config(args: argparse.Namespace, kind: AttackKind | None = None) -> SimConfig:
    params = ProtocolParams(
        num_nodes=args.nodes,
        updates_per_round=args.updates_per_round,
        update_lifetime=args.lifetime,
        copies_seeded=args.copies_seeded,
        push_size=args.push_size,
        recent_window=args.recent_window,
        expiring_window=args.expiring_window,
        obedient_bonus=args.obedient_bonus,
    )
    if kind is None:
        kind = _attack_kind(args.attack)
    attack = AttackConfig(
        kind=kind,
        attacker_frac=args.attacker_frac if kind is not AttackKind.NONE else 0.0,
        satiate_frac=args.satiate_frac,
        rotation_interval=args.rotation_interval,
    )
    reporting = ReportingConfig(
        enabled=args.reporting_cap is not None,
        service_cap=args.reporting_cap if args.reporting_cap is not None else 10,
        eviction_threshold=args.reporting_threshold,
    )
    config = SimConfig(
        params=params,
        attack=attack,
        reporting=reporting,
        obedient_frac=args.obedient_frac,
        total_rounds=args.rounds,
        warmup_rounds=args.warmup,
        master_seed=args.seed,
    )
    config.validate()
    return config


def _parse_fracs(spec: str) -> tuple[float, ...]:
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError("--fracs must look like lo:hi:step, e.g. 0:0.6:0.05")
    return frange(float(parts[0]), float(parts[1]), float(parts[2]))


def _seed_panel(master_seed: int, count: int) -> tuple[int, ...]:
    if count < 1:
        raise ConfigError("--seeds must be >= 1")
    return tuple(master_seed + i for i in range(count))


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _write_csv(header, rows, out_path, comment: str) -> None:
    stream, close = _open_out(out_path)
    try:
        stream.write(comment + "\n")
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
    finally:
        if close:
            stream.close()


def _write_line(line: str, out_path: str | None) -> None:
    stream, close = _open_out(out_path)
    try:
        stream.write(line + "\n")
    finally:
        if close:
            stream.close()


def _provenance(argv: list[str]) -> str:
    # The destination is not part of the experiment: identical flags give
    # identical bytes wherever they are written.
    kept, skip = [], False
    for arg in argv:
        if skip:
            skip = False
            continue
        if arg == "--out":
            skip = True
            continue
        if arg.startswith("--out="):
            continue
        kept.append(arg)
    return "# lotussim " + " ".join(shlex.quote(a) for a in kept)


def _cmd_run(args, argv) -> int:
    config = _sim_config(args)
    report = run(config)
    header = ["group", "n_nodes", "mean_delivery", "usable_frac",
              "uploads_per_node_per_round", "junk_units", "reports_filed", "evictions"]
    rows = []
    for name, g in (
        ("isolated", report.isolated),
        ("satiated_honest", report.satiated_honest),
        ("attacker", report.attacker),
    ):
        rows.append([name, g.n_nodes, g.mean_delivery, g.usable_frac,
                     g.uploads_per_node_round, g.junk_units, g.reports_filed, g.evictions])
    _write_csv(header, rows, args.out, _provenance(argv))
    return 0


def _cmd_sweep(args, argv) -> int:
    kinds = tuple(_attack_kind(k.strip()) for k in args.attack.split(","))
    base = _sim_config(args, kind=kinds[0])
    spec = SweepSpec(
        base=base,
        attacks=kinds,
        fractions=_parse_fracs(args.fracs),
        seeds=_seed_panel(args.seed, args.seeds),
    )
    rows = sweep(spec)
    stream, close = _open_out(args.out)
    try:
        stream.write(_provenance(argv) + "\n")
        emit_csv(rows, stream)
    finally:
        if close:
            stream.close()
    return 0


def _cmd_threshold(args, argv) -> int:
    kind = _attack_kind(args.attack)
    base = _sim_config(args, kind=kind)
    grid = _parse_fracs(args.fracs)
    lo, hi = grid[0], grid[-1]
    step = round(grid[1] - grid[0], 10) if len(grid) > 1 else 0.05
    result = find_threshold(
        base,
        kind,
        seeds=_seed_panel(args.seed, args.seeds),
        target=args.target,
        resolution=args.resolution,
        frac_lo=lo,
        frac_hi=hi,
        prescan_step=step,
    )
    if result.noise_warning:
        print("warning: non-monotone delivery curve, used grid fallback", file=sys.stderr)
    _write_line(format_value(result.threshold), args.out)
    return 0


def _cmd_coverage(args, argv) -> int:
    value = analytic_seed_coverage(args.nodes, args.coalition, args.copies_seeded)
    _write_line(format_value(value), args.out)
    return 0


def _cmd_model(args, argv) -> int:
    graph = abstract_model.parse_graph_spec(args.graph, args.nodes, args.seed)
    schedule = None
    if args.attack_nodes:
        satiated = frozenset(int(v) for v in args.attack_nodes.split(","))
        schedule = lambda round_no: satiated  # noqa: E731 - permanent attack
    system = abstract_model.make_system(
        graph,
        tokens=args.tokens if args.tokens is not None else graph.number_of_nodes(),
        contact_budget=args.contact,
        altruism=args.altruism,
        attack_schedule=schedule,
    )
    rng = np.random.default_rng(args.seed)
    state = abstract_model.initial_state(system)
    rows = []
    n = system.num_nodes

    def satiated_count(st):
        return sum(1 for h in st.holdings if h == set(system.tokens))

    rows.append([0, satiated_count(state), n])
    while state.round_no < args.max_rounds and satiated_count(state) < n:
        state = abstract_model.model_step(state, system, rng)
        rows.append([state.round_no, satiated_count(state), n])
    _write_csv(["round", "satiated_nodes", "total_nodes"], rows, args.out, _provenance(argv))
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="lotussim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="one simulation; per-group metrics as CSV")
    _add_sim_flags(p_run)
    p_run.add_argument("--out", default=None, help="output path (default stdout)")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="attack x fraction x seed sweep as CSV")
    _add_sim_flags(p_sweep)
    p_sweep.set_defaults(attack="crash,ideal,trade")
    p_sweep.add_argument("--seeds", type=int, default=5,
                         help="seeds per point, derived from --seed (default 5)")
    p_sweep.add_argument("--fracs", default="0:0.6:0.05",
                         help="attacker fractions lo:hi:step (default 0:0.6:0.05)")
    p_sweep.add_argument("--out", default=None, help="output path (default stdout)")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_thr = sub.add_parser("threshold", help="smallest attacker fraction that breaks usability")
    _add_sim_flags(p_thr)
    p_thr.add_argument("--seeds", type=int, default=5,
                       help="seeds averaged per probe (default 5)")
    p_thr.add_argument("--fracs", default="0:0.6:0.05",
                       help="pre-scan grid lo:hi:step (default 0:0.6:0.05)")
    p_thr.add_argument("--target", type=float, default=0.93,
                       help="usability target on isolated mean delivery (default 0.93)")
    p_thr.add_argument("--resolution", type=float, default=0.01,
                       help="threshold resolution (default 0.01)")
    p_thr.add_argument("--out", default=None, help="output path (default stdout)")
    p_thr.set_defaults(func=_cmd_threshold)

    p_cov = sub.add_parser("coverage", help="analytic probability a fresh update reaches the coalition")
    p_cov.add_argument("--nodes", type=int, default=250, help="number of nodes (default 250)")
    p_cov.add_argument("--coalition", type=int, required=True, help="coalition size")
    p_cov.add_argument("--copies-seeded", type=int, default=12,
                       help="broadcaster copies per update (default 12)")
    p_cov.add_argument("--out", default=None, help="output path (default stdout)")
    p_cov.set_defaults(func=_cmd_coverage)

    p_model = sub.add_parser("model", help="abstract token-collecting system; satiation series as CSV")
    p_model.add_argument("--graph", default="cycle",
                         help="path|cycle|complete|grid:RxC|gnp:N:P|file:PATH (default cycle)")
    p_model.add_argument("--nodes", type=int, default=20,
                         help="node count for path/cycle/complete (default 20)")
    p_model.add_argument("--tokens", type=int, default=None,
                         help="token count, dealt round-robin (default: one per node)")
    p_model.add_argument("--contact", type=int, default=1,
                         help="contact budget per round (default 1)")
    p_model.add_argument("--altruism", type=float, default=0.0,
                         help="probability a satiated node still responds (default 0)")
    p_model.add_argument("--attack-nodes", default=None,
                         help="comma-separated node ids satiated every round")
    p_model.add_argument("--max-rounds", type=int, default=1000,
                         help="stop after this many rounds (default 1000)")
    p_model.add_argument("--seed", type=int, default=0, help="rng seed (default 0)")
    p_model.add_argument("--out", default=None, help="output path (default stdout)")
    p_model.set_defaults(func=_cmd_model)

    return parser


def main(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args, argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
