"""NW derivations: rules, trail relations, the tracking automaton and the checker."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .automata import Lasso, Parity, StreamAutomaton
from .cycleengine import ConditionGraph, Pair, all_scs_good, sccs
from .derivation import AXIOMS, Derivation, Node, insert_discharges
from .determinize import GREEN, RED, det_parity_step, initial_parity_macrostate
from .errors import NotALasso, NotApplicable, NotARuleInstance, StructuralError
from .mucalc import (NU, And, Box, Dia, Fix, NegProp, Or, Prop, Top, closure,
                     sorted_formulas, trace_classify, unfold)

RULE_OF = {Or: "R_or", And: "R_and", Box: "R_box"}


def rule_for(principal) -> str:
    if isinstance(principal, Fix):
        return "R_nu" if principal.op == NU else "R_mu"
    try:
        return RULE_OF[type(principal)]
    except KeyError:
        raise NotApplicable(f"no rule has principal formula {principal}") from None


def axiom_applies(rule: str, sequent) -> bool:
    if rule == "Ax1":
        return any(isinstance(f, NegProp) and Prop(f.name) in sequent for f in sequent)
    if rule == "Ax2":
        return any(isinstance(f, Top) for f in sequent)
    return False


def apply_nw_rule(rule: str, principal, sequent) -> list:
    sequent = frozenset(sequent)
    if rule in AXIOMS:
        if not axiom_applies(rule, sequent):
            raise NotApplicable(f"{rule} does not close {{{', '.join(map(str, sequent))}}}")
        return []
    if rule == "Dis":
        return [sequent]
    if principal not in sequent:
        raise NotApplicable(f"principal {principal} not in the sequent")
    if rule_for(principal) != rule:
        raise NotApplicable(f"{rule} does not apply to {principal}")
    rest = sequent - {principal}
    if rule == "R_or":
        return [rest | {principal.left, principal.right}]
    if rule == "R_and":
        return [rest | {principal.left}, rest | {principal.right}]
    if rule in ("R_mu", "R_nu"):
        return [rest | {unfold(principal)}]
    # R_box: the diamond context is stripped, everything else dropped
    return [frozenset([principal.body] + [f.body for f in rest if isinstance(f, Dia)])]


@dataclass(frozen=True)
class TrailStep:
    conclusion: frozenset
    principal: object
    premise: frozenset
    active: frozenset
    passive: frozenset

    @property
    def trail(self) -> frozenset:
        return self.active | self.passive


@lru_cache(maxsize=65536)
def trail_relation(conclusion: frozenset, principal, premise: frozenset) -> TrailStep:
    """Active and passive trail pairs of one rule instance.

    ``principal=None`` stands for a discharge step or a back-edge, whose trail
    is the identity on the (equal) sequents.
    """
    if principal is None:
        if conclusion != premise:
            raise NotARuleInstance("identity step between different sequents")
        return TrailStep(conclusion, None, premise, frozenset(),
                         frozenset((f, f) for f in conclusion))
    try:
        rule = rule_for(principal)
        premises = apply_nw_rule(rule, principal, conclusion)
    except NotApplicable as e:
        raise NotARuleInstance(str(e)) from None
    if premise not in premises:
        raise NotARuleInstance(f"{rule} on {principal} does not yield that premise")
    rest = conclusion - {principal}
    if rule == "R_box":
        active = {(principal, principal.body)}
        active |= {(f, f.body) for f in rest if isinstance(f, Dia)}
        return TrailStep(conclusion, principal, premise, frozenset(active), frozenset())
    if rule == "R_or":
        active = {(principal, principal.left), (principal, principal.right)}
    elif rule == "R_and":
        # both sides when the two premises coincide
        active = {(principal, g) for g in (principal.left, principal.right)
                  if premise == rest | {g}}
    else:
        active = {(principal, unfold(principal))}
    passive = frozenset((f, f) for f in rest)
    return TrailStep(conclusion, principal, premise, frozenset(active), passive)


# -- tracking automaton --------------------------------------------------------

class _Initial:
    __slots__ = ()

    def __repr__(self):
        return "a_I"

    __str__ = __repr__

    def __reduce__(self):
        return (_initial, ())


A_I = _Initial()


def _initial():
    return A_I


@dataclass(frozen=True)
class Star:
    formula: Fix

    def __str__(self):
        return f"({self.formula})*"


class TrackingAutomaton(StreamAutomaton):
    """Parity automaton over rule-instance letters ``(conclusion, principal, premise)``.

    The alphabet is never materialized (``alphabet is None``); transitions are
    computed from the trail relation of each letter.
    """

    def __init__(self, phi):
        self.phi = frozenset(phi)
        self.table = closure(self.phi)
        m = self.table.m
        neutral = 1 if m is None else (m if m % 2 else m + 1)
        members = sorted_formulas(self.table.members)
        self.states = [A_I] + members + [Star(f) for f in self.table.fix]
        pri = {q: neutral for q in self.states}
        for f in self.table.fix:
            pri[Star(f)] = self.table.omega[f]
        self.alphabet = None
        self.transitions = {}
        self.initial = A_I
        self.acceptance = Parity(pri)
        self.deterministic = False
        self._masks = None
        self._cache: dict = {}

    def max_even_priority(self):
        return self.table.m

    def delta(self, q, letter) -> frozenset:
        key = (q, letter)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        out = self._delta(q, letter)
        self._cache[key] = out
        return out

    def _delta(self, q, letter) -> frozenset:
        if q is A_I:
            return self.phi
        gamma, xi, gamma2 = letter
        # a Star stands for the unfolding, which may itself be a fixpoint
        src = unfold(q.formula) if isinstance(q, Star) else q
        if isinstance(src, Fix) and src == xi:
            return frozenset([Star(src)])
        step = trail_relation(gamma, xi, gamma2)
        return frozenset(b for a, b in step.trail if a == src)


def tracking_automaton(phi) -> TrackingAutomaton:
    return TrackingAutomaton(phi)


# -- branches --------------------------------------------------------------------

@dataclass(frozen=True)
class Branch:
    """An ultimately periodic path of node ids through the proof graph."""
    stem: tuple
    cycle: tuple

    def nodes(self):
        return self.stem + self.cycle


def _step_letter(d: Derivation, u: str, v: str):
    n = d[u]
    if n.rule is None or n.rule == "Dis":
        return (n.sequent, None, d[v].sequent)
    return (n.sequent, n.principal, d[v].sequent)


def check_branch(d: Derivation, b: Branch):
    if not b.cycle:
        raise NotALasso("empty cycle")
    edges = d.edges()
    seq = b.stem + b.cycle + b.cycle[:1]
    if seq[0] != d.root:
        raise NotALasso("branch must start at the root")
    for u, v in zip(seq, seq[1:]):
        if v not in edges[u]:
            raise NotALasso(f"{u} -> {v} is not an edge of the proof graph")


def branch_word(d: Derivation, b: Branch) -> Lasso:
    check_branch(d, b)
    nodes = b.stem + b.cycle
    v0 = d[nodes[0]]
    first = (v0.sequent, None if v0.rule in (None, "Dis") else v0.principal, v0.sequent)
    steps = [_step_letter(d, u, v) for u, v in zip(nodes, nodes[1:] + b.cycle[:1])]
    s = len(b.stem)
    return Lasso((first,) + tuple(steps[:s]), tuple(steps[s:]))


def enumerate_branches(d: Derivation, max_len: int | None = None, limit: int = 5000) -> list:
    """Lasso branches whose loop is a closed walk of length at most ``max_len``.

    Each loop is rotated to start at its shallowest node; the stem is the tree
    path from the root to that node.
    """
    edges = d.edges()
    n = len(d)
    max_len = n if max_len is None else max_len
    depth = {d.root: 0}
    order = list(d.nodes)
    for nid in order:
        for c in d[nid].children:
            depth[c] = depth[nid] + 1
    rank = {nid: (depth[nid], i) for i, nid in enumerate(order)}
    found = {}
    for start in order:
        # closed walks through start that stay at or below its rank
        stack = [(start, (start,))]
        while stack and len(found) < limit:
            v, walk = stack.pop()
            for w in edges[v]:
                if w == start:
                    found.setdefault(walk, None)
                elif len(walk) < max_len and rank[w] > rank[start]:
                    stack.append((w, walk + (w,)))
    out = []
    for cyc in found:
        if _is_primitive(cyc):
            stem = tuple(d.path(d.root, cyc[0])[:-1])
            out.append(Branch(stem, cyc))
    return out


def _is_primitive(cyc) -> bool:
    n = len(cyc)
    return not any(n % p == 0 and cyc == cyc[:p] * (n // p) for p in range(1, n))


def nu_trail_oracle(d: Derivation, b: Branch) -> bool:
    """Does the branch carry a trail whose tightening is a nu-trace?

    Decided on the product of branch positions and formulas: look for a
    reachable cycle of trail edges whose least-priority unfolding is a
    greatest fixpoint, then confirm the tightened cycle by classifying it.
    """
    check_branch(d, b)
    nodes = b.stem + b.cycle
    s, n = len(b.stem), len(nodes)
    table = closure(d[d.root].sequent)

    def nxt(i):
        return i + 1 if i + 1 < n else s

    steps = []
    for i in range(n):
        u, v = nodes[i], nodes[nxt(i)]
        gamma, xi, gamma2 = _step_letter(d, u, v)
        steps.append(trail_relation(gamma, xi, gamma2))
    inf = float("inf")
    # product edges: (i, f) -> (i+1, g) with priority of the unfolding or inf
    adj: dict = {}
    start = [(0, f) for f in d[nodes[0]].sequent]
    seen = set(start)
    todo = list(start)
    while todo:
        i, f = todo.pop()
        out = []
        st = steps[i]
        for a, g in st.active:
            if a == f:
                p = table.omega[f] if isinstance(f, Fix) and st.principal == f else inf
                out.append(((nxt(i), g), p, True))
        for a, g in st.passive:
            if a == f:
                out.append(((nxt(i), g), inf, False))
        adj[i, f] = out
        for w, _, _ in out:
            if w not in seen:
                seen.add(w)
                todo.append(w)
    prios = sorted({p for outs in adj.values() for _, p, _ in outs if p != inf and p % 2 == 0})
    for dmin in prios:
        keep = {v: [w for w, p, _ in adj[v] if p >= dmin] for v in adj}
        for comp in sccs(keep, keep):
            cset = set(comp)
            for v in comp:
                for w, p, _ in adj[v]:
                    if p == dmin and w in cset:
                        cyc = _cycle_through(v, w, cset, adj, dmin)
                        tight = [f for (_, f), active in cyc if active]
                        if trace_classify(tight, table) == NU:
                            return True
    return False


def _cycle_through(v, w, cset, adj, dmin):
    """Edge list (source, active?) of a cycle using the edge v->w inside cset."""
    # BFS from w back to v using edges of priority >= dmin
    prev = {w: None}
    queue = [w]
    for x in queue:
        if x == v:
            break
        for y, p, act in adj[x]:
            if p >= dmin and y in cset and y not in prev:
                prev[y] = (x, act)
                queue.append(y)
    path = []
    x = v
    while x != w:
        px, act = prev[x]
        path.append((px, act))
        x = px
    path.reverse()
    first_active = next(act for y, p, act in adj[v] if y == w and p == dmin)
    return [(v, first_active)] + path


# -- checking ---------------------------------------------------------------------

def validate_nw(d: Derivation):
    """Structural checks: shape, rule instances and discharge conditions."""
    if d.annotated:
        raise StructuralError("expected an NW derivation with plain sequents")
    d.check_shape()
    for nid, n in d.nodes.items():
        if n.rule is None:
            continue
        try:
            premises = apply_nw_rule(n.rule, n.principal, n.sequent)
        except NotApplicable as e:
            raise StructuralError(str(e), nid) from None
        got = [d[c].sequent for c in n.children]
        if got != premises:
            raise StructuralError(f"premises do not match rule {n.rule}", nid)


@dataclass
class NwVerdict:
    proof: bool
    witness: frozenset = frozenset()  # node ids of a bad strongly connected set
    product_size: int = 0

    def __bool__(self):
        return self.proof


def check_nw(d: Derivation) -> NwVerdict:
    validate_nw(d)
    aut = tracking_automaton(d[d.root].sequent)
    edges = d.edges()
    step_cache: dict = {}

    def step(S, letter):
        key = (S, letter)
        if key not in step_cache:
            step_cache[key] = det_parity_step(S, letter, aut)
        return step_cache[key]

    root = d[d.root]
    first = (root.sequent, None if root.rule in (None, "Dis") else root.principal,
             root.sequent)
    start = (d.root, step(initial_parity_macrostate(aut), first))
    graph: dict = {start: []}
    todo = [start]
    while todo:
        v, S = todo.pop()
        out = []
        for w in edges[v]:
            node = (w, step(S, _step_letter(d, v, w)))
            out.append(node)
            if node not in graph:
                graph[node] = []
                todo.append(node)
        graph[v, S] = out
    m = aut.max_even_priority()
    cands = set()
    for _, S in graph:
        for k in range(0, (m if m is not None else -1) + 1, 2):
            cands |= {(k, s) for s in S.tree(k)}
    pairs = [_rabin_pair(k, s) for k, s in sorted(cands)]
    cg = ConditionGraph(list(graph), graph, pairs)
    res = all_scs_good(cg)
    witness = frozenset(v for v, _ in res.witness)
    return NwVerdict(res.good, witness, len(graph))


def _rabin_pair(k, s):
    return Pair((k, s),
                inplay=lambda v: s in v[1].tree(k),
                good=lambda v: v[1].c(k).get(s) == GREEN,
                bad=lambda v: v[1].c(k).get(s) == RED)


def check_nw_brute(d: Derivation, max_len: int | None = None) -> NwVerdict:
    """Enumerate lasso branches and test each with the trail oracle."""
    validate_nw(d)
    for b in enumerate_branches(d, max_len):
        if not nu_trail_oracle(d, b):
            return NwVerdict(False, frozenset(b.cycle))
    return NwVerdict(True)


# -- building cyclic derivations ---------------------------------------------------

def _invertible(f) -> bool:
    return isinstance(f, (Or, And, Fix))


def build_nw(sequent, choose_box=None, max_nodes: int = 2000) -> Derivation | None:
    """A cyclic NW derivation found by a fixed strategy, or None.

    Axioms close a sequent when possible; otherwise the least invertible
    formula is principal; otherwise ``choose_box`` picks among the boxes
    (default: the least).  A sequent equal to one on the path to the root is
    discharged against the nearest such ancestor.  The result need not be a
    proof.
    """
    choose_box = choose_box or (lambda boxes: boxes[0])
    nodes: dict = {}
    targets: dict = {}  # id of rule node -> token of its Dis parent
    counter = [0]

    def fresh():
        counter[0] += 1
        if counter[0] > max_nodes:
            raise _GiveUp
        return f"v{counter[0] - 1}"

    def grow(seq, path):
        for i in range(len(path) - 1, -1, -1):
            anc_id, anc_seq = path[i]
            if anc_seq == seq:
                tok = targets.setdefault(anc_id, f"x{len(targets)}")
                nid = fresh()
                nodes[nid] = Node(nid, seq, None, discharge=tok)
                return nid
        nid = fresh()
        for ax in AXIOMS:
            if axiom_applies(ax, seq):
                nodes[nid] = Node(nid, seq, ax)
                return nid
        inv = [f for f in sorted_formulas(seq) if _invertible(f)]
        if inv:
            principal = inv[0]
        else:
            boxes = [f for f in sorted_formulas(seq) if isinstance(f, Box)]
            if not boxes:
                raise _GiveUp
            principal = choose_box(boxes)
        rule = rule_for(principal)
        node = Node(nid, seq, rule, principal)
        nodes[nid] = node
        for prem in apply_nw_rule(rule, principal, seq):
            node.children.append(grow(prem, path + [(nid, seq)]))
        return nid

    try:
        root = grow(frozenset(sequent), [])
    except _GiveUp:
        return None
    return insert_discharges(nodes, root, targets, "nw")


class _GiveUp(Exception):
    pass
