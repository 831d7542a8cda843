"""lotussim: a deterministic simulator of satiation ("lotus-eater")
attacks on an update-dissemination gossip protocol, plus an abstract
token-collecting model for reasoning about such attacks on arbitrary
graphs."""

from .adversary import AttackConfig, AttackKind, ReportingConfig
from .core import (
    ConfigError,
    ExchangeResult,
    NodeKind,
    NodeState,
    ProtocolParams,
    UpdateId,
    balanced_exchange,
    is_satiated,
    live_updates,
    optimistic_push,
    should_initiate_push,
)
from .engine import GroupMetrics, SimConfig, SimReport, resolve_backend, run
from .harness import (
    SweepRow,
    SweepSpec,
    ThresholdResult,
    analytic_seed_coverage,
    emit_csv,
    find_threshold,
    sweep,
)
from .model import (
    AbstractSystem,
    ModelState,
    find_unreachable_tokens,
    make_system,
    model_is_satiated,
    model_step,
    run_until_all_satiated,
)

__version__ = "0.1.0"

__all__ = [
    "AbstractSystem",
    "AttackConfig",
    "AttackKind",
    "ConfigError",
    "ExchangeResult",
    "GroupMetrics",
    "ModelState",
    "NodeKind",
    "NodeState",
    "ProtocolParams",
    "ReportingConfig",
    "SimConfig",
    "SimReport",
    "SweepRow",
    "SweepSpec",
    "ThresholdResult",
    "UpdateId",
    "analytic_seed_coverage",
    "balanced_exchange",
    "emit_csv",
    "find_threshold",
    "find_unreachable_tokens",
    "is_satiated",
    "live_updates",
    "make_system",
    "model_is_satiated",
    "model_step",
    "optimistic_push",
    "resolve_backend",
    "run",
    "run_until_all_satiated",
    "should_initiate_push",
    "sweep",
]
