"""Decide whether every strongly connected subgraph of a graph has a witness.

A :class:`ConditionGraph` carries a family of indexed pairs.  Each pair has
three node predicates: ``inplay``, ``good`` and ``bad``.  A set of nodes
``S`` is *witnessed* by a pair when every node of ``S`` is in play and not
bad, and some node of ``S`` is good.  :func:`all_scs_good` decides whether
every strongly connected subgraph is witnessed by some pair; this is the
emptiness question for a Streett-like condition and is solved by recursive
SCC decomposition.  :func:`brute_scs_good` is the subset-enumeration
oracle for small graphs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable

from .errors import TooLarge


def sccs(nodes: Iterable, succ) -> list:
    """Strongly connected components (iterative Tarjan).

    ``succ`` maps a node to an iterable of successors; successors outside
    ``nodes`` are ignored.  Components come out in reverse topological order.
    """
    nodes = list(nodes)
    allowed = set(nodes)
    get = succ.__getitem__ if isinstance(succ, dict) else succ
    index: dict = {}
    low: dict = {}
    on_stack = set()
    stack: list = []
    out = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        work = [(root, iter([y for y in get(root) if y in allowed]))]
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter([y for y in get(w) if y in allowed])))
                    advanced = True
                    break
                if w in on_stack and index[w] < low[v]:
                    low[v] = index[w]
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                if low[v] < low[u]:
                    low[u] = low[v]
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def is_cyclic_component(comp, succ) -> bool:
    """A component carries a cycle unless it is a single node without self-loop."""
    if len(comp) > 1:
        return True
    v = comp[0]
    get = succ.__getitem__ if isinstance(succ, dict) else succ
    return v in get(v)


@dataclass
class Pair:
    index: Hashable
    inplay: Callable
    good: Callable
    bad: Callable


@dataclass
class ConditionGraph:
    nodes: list
    edges: dict  # node -> list of successor nodes
    pairs: list = field(default_factory=list)

    def succ(self, v):
        return self.edges.get(v, ())


@dataclass
class Verdict:
    good: bool
    witness: frozenset = frozenset()
    # for a good verdict on request: chosen pair per maximal component
    chosen: dict = field(default_factory=dict)

    def __bool__(self):
        return self.good


def _pair_sets(graph: ConditionGraph):
    """Per pair: the set of violating nodes and the set of good nodes."""
    out = []
    for p in graph.pairs:
        viol = frozenset(v for v in graph.nodes if not p.inplay(v) or p.bad(v))
        good = frozenset(v for v in graph.nodes if p.good(v))
        out.append((p.index, viol, good))
    return out


def all_scs_good(graph: ConditionGraph) -> Verdict:
    sets = _pair_sets(graph)
    succ = graph.edges
    get = lambda v: succ.get(v, ())  # noqa: E731
    chosen = {}
    work = [list(graph.nodes)]
    while work:
        region = work.pop()
        for comp in sccs(region, get):
            if not is_cyclic_component(comp, get):
                continue
            cset = set(comp)
            removable = set()
            witness_pair = None
            for idx, viol, good in sets:
                if cset.isdisjoint(viol) and not cset.isdisjoint(good):
                    removable |= cset & good
                    if witness_pair is None:
                        witness_pair = idx
            if not removable:
                return Verdict(False, frozenset(comp))
            chosen.setdefault(frozenset(comp), witness_pair)
            rest = [v for v in comp if v not in removable]
            if rest:
                work.append(rest)
    return Verdict(True, chosen=chosen)


def witnessing_pairs(graph: ConditionGraph, nodes: Iterable) -> list:
    """Indices of the pairs witnessing the node set ``nodes``."""
    nodes = list(nodes)
    return [p.index for p in graph.pairs
            if all(p.inplay(v) and not p.bad(v) for v in nodes)
            and any(p.good(v) for v in nodes)]


def brute_scs_good(graph: ConditionGraph, limit: int = 15) -> Verdict:
    if len(graph.nodes) > limit:
        raise TooLarge(f"{len(graph.nodes)} nodes exceed the brute-force limit {limit}")
    get = lambda v: graph.edges.get(v, ())  # noqa: E731
    sets = _pair_sets(graph)
    for comp in sccs(graph.nodes, get):
        if not is_cyclic_component(comp, get):
            continue
        pos = {v: i for i, v in enumerate(comp)}
        adj = [0] * len(comp)
        for v in comp:
            for w in get(v):
                if w in pos:
                    adj[pos[v]] |= 1 << pos[w]
        masks = []
        for _, viol, good in sets:
            vm = sum(1 << pos[v] for v in comp if v in viol)
            gm = sum(1 << pos[v] for v in comp if v in good)
            masks.append((vm, gm))
        for subset in range(1, 1 << len(comp)):
            if all(subset & vm or not subset & gm for vm, gm in masks):
                if _strongly_connected(subset, adj):
                    return Verdict(False, frozenset(comp[i] for i in range(len(comp))
                                                    if subset >> i & 1))
    return Verdict(True)


def _reach(start: int, subset: int, adj) -> int:
    seen = 1 << start
    frontier = seen
    while frontier:
        nxt = 0
        f = frontier
        while f:
            low = f & -f
            nxt |= adj[low.bit_length() - 1]
            f ^= low
        nxt &= subset
        frontier = nxt & ~seen
        seen |= nxt
    return seen


def _strongly_connected(subset: int, adj) -> bool:
    start = (subset & -subset).bit_length() - 1
    if subset == 1 << start:
        return bool(adj[start] >> start & 1)
    # forward reach from start must cover subset and start must be reachable
    # back from everything; reach restricted to subset via successor masks
    fwd = _reach(start, subset, adj)
    if fwd & subset != subset:
        return False
    n = len(adj)
    radj = [0] * n
    for i in range(n):
        a = adj[i]
        while a:
            low = a & -a
            radj[low.bit_length() - 1] |= 1 << i
            a ^= low
    bwd = _reach(start, subset, radj)
    return bwd & subset == subset
