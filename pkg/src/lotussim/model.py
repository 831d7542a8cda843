"""Abstract token-collecting system on a graph.

A round works like this: an attacker may first hand chosen nodes the full
token set; then every node that is not satiated contacts up to
contact_budget random neighbours, and each contacted pair swaps copies of
their start-of-round token sets.  A satiated node never initiates and
responds to each incoming request only with the altruism probability.
All exchanges in a round are simultaneous.

RNG protocol (kept identical by any re-implementation that wants to
compare states): visit unsatiated nodes in ascending id; per node draw one
``choice`` of neighbour indices without replacement from the sorted
adjacency list; then, iterating the selected partners in draw order, draw
one uniform float per request whose responder is satiated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import AbstractSet, Callable, Iterable, Mapping

import networkx as nx
import numpy as np

from .core import ConfigError

AttackSchedule = Callable[[int], AbstractSet[int]]


@dataclass(frozen=True)
class AbstractSystem:
    adjacency: tuple[tuple[int, ...], ...]  # sorted neighbour ids per node
    tokens: frozenset[int]
    allocation: tuple[frozenset[int], ...]
    contact_budget: int
    altruism: float
    attack_schedule: AttackSchedule | None = None

    @property
    def num_nodes(self) -> int:
        return len(self.adjacency)

    def attacked_nodes(self, round_no: int) -> frozenset[int]:
        if self.attack_schedule is None:
            return frozenset()
        return frozenset(self.attack_schedule(round_no))


@dataclass
class ModelState:
    round_no: int
    holdings: list[set[int]]
    uploads: list[int]  # tokens copied to a partner that partner lacked


def make_system(
    graph: nx.Graph,
    tokens: int | Iterable[int],
    allocation: Mapping[int, Iterable[int]] | None = None,
    contact_budget: int = 1,
    altruism: float = 0.0,
    attack_schedule: AttackSchedule | None = None,
) -> AbstractSystem:
    """Validate and freeze a system.  Nodes must be 0..n-1; the graph must
    be connected and every token must appear in some node's allocation.
    With allocation=None tokens are dealt round-robin: token j to node
    j mod n."""
    n = graph.number_of_nodes()
    if n == 0:
        raise ConfigError("graph has no nodes")
    if set(graph.nodes) != set(range(n)):
        raise ConfigError("graph nodes must be exactly 0..n-1")
    if n > 1 and not nx.is_connected(graph):
        raise ConfigError("graph must be connected")
    token_set = frozenset(range(tokens)) if isinstance(tokens, int) else frozenset(tokens)
    if not token_set:
        raise ConfigError("token set must be nonempty")
    if allocation is None:
        alloc = [set() for _ in range(n)]
        for j, tok in enumerate(sorted(token_set)):
            alloc[j % n].add(tok)
    else:
        alloc = [set(allocation.get(v, ())) for v in range(n)]
    for v, held in enumerate(alloc):
        if not held <= token_set:
            raise ConfigError(f"node {v} allocated tokens outside the token set")
    covered = set().union(*alloc) if alloc else set()
    if covered != token_set:
        raise ConfigError("every token must appear in at least one allocation")
    if contact_budget < 1:
        raise ConfigError("contact_budget must be >= 1")
    if not 0.0 <= altruism <= 1.0:
        raise ConfigError("altruism must be in [0, 1]")
    return AbstractSystem(
        adjacency=tuple(tuple(sorted(graph.neighbors(v))) for v in range(n)),
        tokens=token_set,
        allocation=tuple(frozenset(a) for a in alloc),
        contact_budget=contact_budget,
        altruism=altruism,
        attack_schedule=attack_schedule,
    )


def initial_state(system: AbstractSystem) -> ModelState:
    return ModelState(
        round_no=0,
        holdings=[set(a) for a in system.allocation],
        uploads=[0] * system.num_nodes,
    )


def model_is_satiated(holdings: AbstractSet[int], tokens: AbstractSet[int]) -> bool:
    """A node is satiated exactly when it holds the full token set."""
    if not holdings <= tokens:
        raise ValueError("holdings must be a subset of the token set")
    return holdings == tokens


def model_step(
    state: ModelState, system: AbstractSystem, rng: np.random.Generator
) -> ModelState:
    """One simultaneous exchange round; returns a new state."""
    n = system.num_nodes
    base = [set(h) for h in state.holdings]
    for v in sorted(system.attacked_nodes(state.round_no)):
        base[v] = set(system.tokens)
    sat = [h == set(system.tokens) for h in base]

    pairs: set[tuple[int, int]] = set()
    for i in range(n):
        if sat[i]:
            continue  # satiated nodes do not initiate
        adj = system.adjacency[i]
        if not adj:
            continue
        k = min(system.contact_budget, len(adj))
        picked = rng.choice(len(adj), size=k, replace=False)
        for idx in picked:
            p = adj[int(idx)]
            if sat[p] and not (rng.random() < system.altruism):
                continue
            pairs.add((min(i, p), max(i, p)))

    new_hold = [set(h) for h in base]
    uploads = list(state.uploads)
    for i, p in pairs:
        uploads[i] += len(base[i] - base[p])
        uploads[p] += len(base[p] - base[i])
        new_hold[i] |= base[p]
        new_hold[p] |= base[i]
    return ModelState(round_no=state.round_no + 1, holdings=new_hold, uploads=uploads)


def all_satiated(state: ModelState, system: AbstractSystem) -> bool:
    return all(model_is_satiated(h, system.tokens) for h in state.holdings)


def run_until_all_satiated(
    system: AbstractSystem,
    max_rounds: int,
    rng: np.random.Generator,
    state: ModelState | None = None,
) -> tuple[int | None, ModelState]:
    """Step until every node is satiated.  Returns (round count, final
    state); the count is None when max_rounds is exhausted first."""
    if max_rounds < 1:
        raise ConfigError("max_rounds must be >= 1")
    if state is None:
        state = initial_state(system)
    if all_satiated(state, system):
        return state.round_no, state
    while state.round_no < max_rounds:
        state = model_step(state, system, rng)
        if all_satiated(state, system):
            return state.round_no, state
    return None, state


def find_unreachable_tokens(
    system: AbstractSystem, satiated_set: AbstractSet[int]
) -> dict[frozenset[int], frozenset[int]]:
    """Remove the permanently satiated nodes; for each remaining connected
    component report the tokens absent from every member's initial
    allocation.  With zero altruism those tokens can never reach that
    component."""
    g = nx.Graph()
    g.add_nodes_from(range(system.num_nodes))
    for v, nbrs in enumerate(system.adjacency):
        g.add_edges_from((v, w) for w in nbrs if w > v)
    g.remove_nodes_from(satiated_set)
    out: dict[frozenset[int], frozenset[int]] = {}
    for comp in nx.connected_components(g):
        present = set().union(*(system.allocation[v] for v in comp))
        out[frozenset(comp)] = frozenset(system.tokens - present)
    return out


# Graph constructors (0-based integer nodes throughout).

def path_graph(n: int) -> nx.Graph:
    return nx.path_graph(n)


def cycle_graph(n: int) -> nx.Graph:
    return nx.cycle_graph(n)


def complete_graph(n: int) -> nx.Graph:
    return nx.complete_graph(n)


def grid_graph(rows: int, cols: int) -> nx.Graph:
    g = nx.grid_2d_graph(rows, cols)
    return nx.relabel_nodes(g, {(r, c): r * cols + c for r, c in g.nodes})


def gnp_graph(n: int, p: float, seed: int) -> nx.Graph:
    return nx.gnp_random_graph(n, p, seed=seed)


def read_edge_list(path: str) -> nx.Graph:
    """One 'u v' pair per line, 0-based integer ids; blank lines and
    #-comments ignored."""
    g = nx.Graph()
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split()
            if len(parts) != 2:
                raise ConfigError(f"{path}:{line_no}: expected 'u v', got {text!r}")
            u, v = int(parts[0]), int(parts[1])
            g.add_edge(u, v)
    if g.number_of_nodes() == 0:
        raise ConfigError(f"{path}: no edges found")
    g.add_nodes_from(range(max(g.nodes) + 1))
    return g


def parse_graph_spec(spec: str, num_nodes: int, seed: int) -> nx.Graph:
    """Graph flag syntax: path | cycle | complete | grid:RxC | gnp:N:P |
    file:PATH.  The first three take their size from num_nodes."""
    if spec == "path":
        return path_graph(num_nodes)
    if spec == "cycle":
        return cycle_graph(num_nodes)
    if spec == "complete":
        return complete_graph(num_nodes)
    if spec.startswith("grid:"):
        dims = spec[len("grid:") :].lower().split("x")
        if len(dims) != 2:
            raise ConfigError("grid spec must look like grid:RxC")
        return grid_graph(int(dims[0]), int(dims[1]))
    if spec.startswith("gnp:"):
        parts = spec.split(":")
        if len(parts) != 3:
            raise ConfigError("gnp spec must look like gnp:N:P")
        return gnp_graph(int(parts[1]), float(parts[2]), seed)
    if spec.startswith("file:"):
        return read_edge_list(spec[len("file:") :])
    raise ConfigError(f"unknown graph spec {spec!r}")
