"""The annotated cyclic system BT: rules, saturation, checking, translation, search.

An annotated sequent is a frozenset of ``(formula, annotation)`` pairs where
every annotation is a tuple with one bit string per even priority.
"""

from __future__ import annotations

import itertools
import sys
from dataclasses import dataclass, field

from .bitstring import (epsilon_tseq, is_all_zeros, min_leaf, positions, prefix_closure,
                        tseq_length, tseq_less, working_tree)
from .cycleengine import ConditionGraph, Pair, all_scs_good, brute_scs_good
from .derivation import AXIOMS, Derivation, Node, insert_discharges
from .errors import BudgetExceeded, NotApplicable, StructuralError, TranslationFailed
from .mucalc import And, Box, Dia, Fix, Formula, NegProp, Or, Prop, Top, closure, unfold
from .nwproof import rule_for, validate_nw

DEFAULT_CAP = 10 ** 5


def _item_key(item):
    return (str(item[0]), item[1])


def sorted_items(seq) -> list:
    return sorted(seq, key=_item_key)


def strings_at(seq, k: int) -> set:
    """The set of k-components of a sequent's annotations."""
    i = k // 2
    return {sigma[i] for _, sigma in seq}


def occurs_at(seq, k: int) -> frozenset:
    """Everything that occurs at position k: the prefix closure of the k-strings."""
    return prefix_closure(strings_at(seq, k))


def erase_annotations(seq) -> frozenset:
    return frozenset(f for f, _ in seq)


def annotate(sequent, m) -> frozenset:
    eps = epsilon_tseq(m)
    return frozenset((f, eps) for f in sequent)


def restrict(sigma: tuple, k: int, gamma) -> tuple:
    """Replace every component past position k by the least leaf at that position."""
    out = list(sigma)
    for i in range(k // 2 + 1, len(sigma)):
        out[i] = min_leaf(working_tree(strings_at(gamma, 2 * i), patch=True))
    return tuple(out)


def _append(sigma: tuple, k: int, bit: str) -> tuple:
    i = k // 2
    return sigma[:i] + (sigma[i] + bit,) + sigma[i + 1:]


# -- side conditions ---------------------------------------------------------------

def resolve_candidates(gamma) -> list:
    """Elements that Resolve may delete, in canonical order."""
    by_formula: dict = {}
    for f, sigma in gamma:
        by_formula.setdefault(f, []).append(sigma)
    out = []
    for f in sorted(by_formula, key=str):
        sigmas = sorted(by_formula[f])
        out += [(f, s) for s in sigmas[:-1]]
    return out


def compress_ok(gamma, k: int, pattern: str) -> str | None:
    """None when Compress_k[pattern] applies to gamma, else the failed condition."""
    if not pattern or pattern[-1] not in "01":
        return "pattern must end in a bit"
    s, b = pattern[:-1], pattern[-1]
    strings = strings_at(gamma, k)
    if not any(x.startswith(pattern) for x in strings):
        return f"no annotation at {k} extends {pattern}"
    if any(x.startswith(s) and not x.startswith(pattern) for x in strings):
        return f"{s or 'ε'} occurs in the remaining annotations at {k}"
    if b == "1" and is_all_zeros(s):
        return f"{s or 'ε'} is all zeros"
    return None


def compress_candidates(gamma, m) -> list:
    """Applicable (k, pattern) pairs: k ascending, then longer patterns first."""
    out = []
    for k in positions(m):
        pats = occurs_at(gamma, k) - {""}
        for p in sorted(pats, key=lambda p: (-len(p), p)):
            if compress_ok(gamma, k, p) is None:
                out.append((k, p))
    return out


def _first_compress(gamma, m):
    for k in positions(m):
        pats = occurs_at(gamma, k) - {""}
        for p in sorted(pats, key=lambda p: (-len(p), p)):
            if compress_ok(gamma, k, p) is None:
                return k, p
    return None


def _m_of(gamma) -> int | None:
    for _, sigma in gamma:
        n = len(sigma)
        return None if n == 0 else 2 * (n - 1)
    return None


# -- rules ----------------------------------------------------------------------

def bt_axiom_applies(rule: str, gamma) -> bool:
    forms = erase_annotations(gamma)
    if rule == "Ax1":
        return any(isinstance(f, NegProp) and Prop(f.name) in forms for f in forms)
    if rule == "Ax2":
        return any(isinstance(f, Top) for f in forms)
    return False


def apply_bt_rule(rule: str, principal, gamma, k: int | None = None,
                  pattern: str | None = None, omega: dict | None = None) -> list:
    """Premises of one BT rule instance, or NotApplicable.

    ``omega`` maps fixpoints to priorities; it defaults to the closure of the
    formulas of ``gamma``.  Compress takes ``k`` and ``pattern`` instead of a
    principal.
    """
    gamma = frozenset(gamma)
    if rule in AXIOMS:
        if not bt_axiom_applies(rule, gamma):
            raise NotApplicable(f"{rule} does not close the sequent")
        return []
    if rule == "Dis":
        return [gamma]
    if rule == "Compress":
        if k is None or pattern is None:
            raise NotApplicable("Compress needs a position and a pattern")
        if k not in positions(_m_of(gamma)):
            raise NotApplicable(f"no position {k}")
        why = compress_ok(gamma, k, pattern)
        if why:
            raise NotApplicable(f"Compress_{k}[{pattern}]: {why}")
        i, s, n = k // 2, pattern[:-1], len(pattern)
        out = set()
        for f, sigma in gamma:
            if sigma[i].startswith(pattern):
                sigma = sigma[:i] + (s + sigma[i][n:],) + sigma[i + 1:]
            out.add((f, sigma))
        return [frozenset(out)]
    if principal not in gamma:
        raise NotApplicable("principal not in the sequent")
    phi, sigma = principal
    if rule == "Resolve":
        if not any(g == phi and tseq_less(sigma, tau) for g, tau in gamma):
            raise NotApplicable(f"Resolve: no greater annotation on {phi}")
        return [gamma - {principal}]
    if rule_for(phi) != rule:
        raise NotApplicable(f"{rule} does not apply to {phi}")
    rest = gamma - {principal}
    if rule == "R_or":
        return [rest | {(phi.left, sigma), (phi.right, sigma)}]
    if rule == "R_and":
        return [rest | {(phi.left, sigma)}, rest | {(phi.right, sigma)}]
    if rule == "R_box":
        return [frozenset([(phi.body, sigma)] +
                          [(f.body, tau) for f, tau in rest if isinstance(f, Dia)])]
    if omega is None:
        omega = closure(erase_annotations(gamma)).omega
    p = omega[phi]
    if rule == "R_mu":
        return [rest | {(unfold(phi), restrict(sigma, p, gamma))}]
    # R_nu
    new = (unfold(phi), _append(restrict(sigma, p, gamma), p, "1"))
    return [frozenset((f, _append(tau, p, "0")) for f, tau in rest) | {new}]


@dataclass
class Step:
    rule: str
    conclusion: frozenset
    principal: object = None
    k: int | None = None
    pattern: str | None = None


def saturate(gamma) -> tuple:
    """Apply Resolve, then Compress, until neither applies.

    Returns the stable sequent and the list of steps taken.
    """
    gamma = frozenset(gamma)
    m = _m_of(gamma)
    steps = []
    while True:
        res = resolve_candidates(gamma)
        if res:
            steps.append(Step("Resolve", gamma, res[0]))
            gamma = gamma - {res[0]}
            continue
        hit = _first_compress(gamma, m)
        if hit is None:
            return gamma, steps
        k, p = hit
        steps.append(Step("Compress", gamma, None, k, p))
        gamma = apply_bt_rule("Compress", None, gamma, k, p)[0]


def is_saturated(gamma) -> bool:
    return not resolve_candidates(gamma) and _first_compress(gamma, _m_of(gamma)) is None


# -- checking -------------------------------------------------------------------------

@dataclass
class CheckReport:
    proof: bool
    witness: frozenset = frozenset()        # a bad strongly connected set
    chosen: dict = field(default_factory=dict)  # component -> witnessing (k, s)

    def __bool__(self):
        return self.proof


def validate_bt(d: Derivation, omega: dict | None = None):
    """Structural validity of a BT derivation, including rule priority."""
    if not d.annotated:
        raise StructuralError("expected a BT derivation with annotated sequents")
    d.check_shape()
    root = d[d.root].sequent
    table = closure(erase_annotations(root))
    omega = table.omega if omega is None else omega
    n = tseq_length(table.m)
    for nid, node in d.nodes.items():
        for f, sigma in node.sequent:
            if len(sigma) != n:
                raise StructuralError(f"annotation of {f} has length {len(sigma)}, "
                                      f"expected {n}", nid)
            if f not in table.members:
                raise StructuralError(f"{f} is outside the closure of the root", nid)
        if node.rule is None:
            continue
        if node.rule != "Resolve" and resolve_candidates(node.sequent):
            raise StructuralError(f"{node.rule} used where Resolve applies", nid)
        if node.rule not in ("Resolve", "Compress") and \
                _first_compress(node.sequent, table.m) is not None:
            raise StructuralError(f"{node.rule} used where Compress applies", nid)
        try:
            premises = apply_bt_rule(node.rule, node.principal, node.sequent,
                                     node.k, node.pattern, omega)
        except NotApplicable as e:
            raise StructuralError(str(e), nid) from None
        got = [d[c].sequent for c in node.children]
        if got != premises:
            raise StructuralError(f"premises do not match rule {node.rule}", nid)
    return table


def _is_good(node, k, s) -> bool:
    if node.rule != "Compress" or node.k != k:
        return False
    p = node.pattern
    return p.startswith(s) and p.endswith("1") and is_all_zeros(p[len(s):-1])


def _is_bad(node, k, s, strict: bool) -> bool:
    if node.rule != "Compress" or node.k != k:
        return False
    t = node.pattern
    return s.startswith(t) and (len(t) < len(s) or not strict)


def condition_graph(d: Derivation, m, strict: bool = True) -> ConditionGraph:
    occ = {nid: [occurs_at(n.sequent, k) for k in positions(m)]
           for nid, n in d.nodes.items()}
    cands = sorted({(k, s) for nid in d.nodes for k in positions(m)
                    for s in occ[nid][k // 2]})
    nodes = d.nodes

    def pair(k, s):
        return Pair((k, s),
                    inplay=lambda v: s in occ[v][k // 2],
                    good=lambda v: _is_good(nodes[v], k, s),
                    bad=lambda v: _is_bad(nodes[v], k, s, strict))

    return ConditionGraph(list(d.nodes), d.edges(), [pair(k, s) for k, s in cands])


def check_bt(d: Derivation, strict: bool = True) -> CheckReport:
    """Is the derivation a BT proof?

    A node labelled Compress_k[t] breaks (k, s) when t is a strict prefix of
    s; with ``strict=False`` also when t == s, which is what the red marking
    of the determinized automaton does.
    """
    table = validate_bt(d)
    res = all_scs_good(condition_graph(d, table.m, strict))
    return CheckReport(res.good, res.witness, res.chosen)


def check_bt_brute(d: Derivation, strict: bool = True, limit: int = 15) -> CheckReport:
    table = validate_bt(d)
    res = brute_scs_good(condition_graph(d, table.m, strict), limit)
    return CheckReport(res.good, res.witness)


def segment_witness(segment, m, strict: bool = True):
    """A pair (k, s) preserved and progressing on a list of nodes, or None.

    Nodes are anything with ``sequent``, ``rule``, ``k`` and ``pattern``.
    """
    if not segment:
        return None
    for k in positions(m):
        for s in sorted(occurs_at(segment[0].sequent, k)):
            if all(s in occurs_at(v.sequent, k) and not _is_bad(v, k, s, strict)
                   for v in segment) and any(_is_good(v, k, s) for v in segment):
                return (k, s)
    return None


# -- erasure ------------------------------------------------------------------------

def erase(d: Derivation) -> Derivation:
    """Drop annotations and splice out Resolve and Compress nodes."""
    def skip(nid):
        while d[nid].rule in ("Resolve", "Compress"):
            nid = d[nid].children[0]
        return nid

    out = {}
    root = skip(d.root)
    stack = [root]
    while stack:
        nid = stack.pop()
        n = d[nid]
        kids = [skip(c) for c in n.children]
        principal = n.principal[0] if n.principal is not None else None
        out[nid] = Node(nid, erase_annotations(n.sequent), n.rule, principal, kids,
                        n.discharge, n.companion_of)
        stack.extend(reversed(kids))
    order = []
    stack = [root]
    while stack:
        nid = stack.pop()
        order.append(nid)
        stack.extend(reversed(out[nid].children))
    return Derivation({nid: out[nid] for nid in order}, root, "nw")


# -- NW to BT -------------------------------------------------------------------------

class _Builder:
    """Accumulates BT nodes with temporary ids and discharge targets."""

    def __init__(self, cap):
        self.nodes: dict = {}
        self.targets: dict = {}
        self.cap = cap

    def add(self, seq, rule, principal=None, k=None, pattern=None):
        if len(self.nodes) >= self.cap:
            raise BudgetExceeded(f"more than {self.cap} nodes")
        nid = f"t{len(self.nodes)}"
        self.nodes[nid] = Node(nid, seq, rule, principal, [], k=k, pattern=pattern)
        return nid

    def leaf(self, seq, target):
        tok = self.targets.setdefault(target, f"x{len(self.targets)}")
        nid = self.add(seq, None)
        self.nodes[nid].discharge = tok
        return nid

    def link(self, parent, child):
        if parent is not None:
            self.nodes[parent].children.append(child)

    def chain(self, steps, parent, trail):
        """Add saturation steps below ``parent``; return the last node added."""
        for st in steps:
            nid = self.add(st.conclusion, st.rule, st.principal, st.k, st.pattern)
            self.link(parent, nid)
            trail.append(self.nodes[nid])
            parent = nid
        return parent

    def finish(self, root) -> Derivation:
        return insert_discharges(self.nodes, root, self.targets, "bt")


def _nw_target(nw: Derivation, v: str) -> str:
    """Skip Dis nodes and follow discharged leaves to the companion's child."""
    comp = nw.companions()
    seen = set()
    while True:
        n = nw[v]
        if n.rule == "Dis":
            v = n.children[0]
        elif n.rule is None:
            v = comp[v]
        else:
            return v
        if v in seen:
            raise StructuralError("cycle of Dis nodes and discharged leaves", v)
        seen.add(v)


def translate_nw_to_bt(nw: Derivation, cap: int = DEFAULT_CAP, strict: bool = True) -> Derivation:
    """A cyclic BT proof of the root sequent with empty annotations.

    The NW derivation is unfolded; after every rule the sequent is saturated,
    and a back-edge is tied to the earliest ancestor with the same NW node
    and annotated sequent on whose connecting path some pair is preserved and
    progresses.
    """
    validate_nw(nw)
    phi = nw[nw.root].sequent
    table = closure(phi)
    m = table.m
    b = _Builder(cap)
    trail: list = []  # BT nodes on the current path
    marks: list = []  # (key, index into trail) of rule nodes on the path

    def expand(v, gamma, parent):
        start = len(trail)
        gamma, steps = saturate(gamma)
        first = None
        if steps:
            first = b.add(steps[0].conclusion, steps[0].rule, steps[0].principal,
                          steps[0].k, steps[0].pattern)
            b.link(parent, first)
            trail.append(b.nodes[first])
            parent = b.chain(steps[1:], first, trail)
        v = _nw_target(nw, v)
        key = (v, gamma)
        for mkey, idx in marks:
            if mkey == key and segment_witness(trail[idx:], m, strict):
                nid = b.leaf(gamma, trail[idx].id)
                b.link(parent, nid)
                del trail[start:]
                return first or nid
        n = nw[v]
        principal = None
        if n.rule not in AXIOMS:
            principal = next(x for x in gamma if x[0] == n.principal)
        nid = b.add(gamma, n.rule, principal)
        b.link(parent, nid)
        trail.append(b.nodes[nid])
        marks.append((key, len(trail) - 1))
        if n.rule not in AXIOMS:
            prems = apply_bt_rule(n.rule, principal, gamma, omega=table.omega)
            for prem, c in zip(prems, n.children):
                expand(c, prem, nid)
        marks.pop()
        del trail[start:]
        return first or nid

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 20000))
    try:
        root = expand(nw.root, annotate(phi, m), None)
    finally:
        sys.setrecursionlimit(limit)
    d = b.finish(root)
    if not check_bt(d, strict):
        raise TranslationFailed("the translated derivation is not a BT proof")
    return d


# -- proof search -------------------------------------------------------------------

def depth_budget(phi, cap: int = DEFAULT_CAP) -> int:
    """min(cap, |Clos|^(2 (m/2 + 1) |Clos|)), computed without huge powers."""
    table = closure([phi] if isinstance(phi, Formula) else phi)
    n = len(table.members)
    e = 2 * max(tseq_length(table.m), 1) * n
    out = 1
    for _ in range(e):
        out *= n
        if out >= cap:
            return cap
    return out


@dataclass(frozen=True)
class _T:
    """Immutable search result; ``uid`` names rule nodes that leaves point to."""
    sequent: frozenset
    rule: str | None
    principal: object = None
    k: int | None = None
    pattern: str | None = None
    children: tuple = ()
    uid: int | None = None
    target: int | None = None


def _choices(gamma) -> list:
    inv = [x for x in sorted_items(gamma) if isinstance(x[0], (Or, And, Fix))]
    if inv:
        return inv
    return [x for x in sorted_items(gamma) if isinstance(x[0], Box)]


@dataclass
class ProveResult:
    proof: Derivation | None
    reason: str = ""          # "found", "exhausted" or "budget"
    nodes_explored: int = 0
    candidates: int = 0

    def __bool__(self):
        return self.proof is not None


def prove(goal, depth: int | None = None, cap: int = DEFAULT_CAP,
          strict: bool = True) -> ProveResult:
    """Bounded search for a cyclic BT proof of a formula or sequent.

    ``depth`` bounds the number of rule applications on a path (default
    from :func:`depth_budget`); ``cap`` bounds the number of search nodes.
    """
    if isinstance(goal, str):
        from .mucalc import parse_formula
        goal = parse_formula(goal)
    phi = frozenset([goal]) if isinstance(goal, Formula) else frozenset(goal)
    table = closure(phi)
    m = table.m
    depth = depth_budget(phi, cap) if depth is None else depth
    counter = itertools.count()
    explored = [0]

    def tick():
        explored[0] += 1
        if explored[0] > cap:
            raise BudgetExceeded(f"more than {cap} search nodes")

    def search(gamma, trail, marks):
        tick()
        gamma, steps = saturate(gamma)
        chain = [_T(st.conclusion, st.rule, st.principal, st.k, st.pattern) for st in steps]
        trail = trail + chain

        def wrap(top):
            for t in reversed(chain):
                top = _T(t.sequent, t.rule, t.principal, t.k, t.pattern, (top,))
            return top

        for ax in AXIOMS:
            if bt_axiom_applies(ax, gamma):
                yield wrap(_T(gamma, ax))
                return
        equal = [(uid, idx) for uid, idx, seq in marks if seq == gamma]
        if equal:
            for uid, idx in equal:
                if segment_witness(trail[idx:], m, strict):
                    yield wrap(_T(gamma, None, target=uid))
                    return
            return
        if len(marks) >= depth:
            return
        for principal in _choices(gamma):
            rule = rule_for(principal[0])
            uid = next(counter)
            here = _T(gamma, rule, principal)
            prems = apply_bt_rule(rule, principal, gamma, omega=table.omega)
            sub_marks = marks + [(uid, len(trail), gamma)]
            sub_trail = trail + [here]
            for kids in _product(prems, sub_trail, sub_marks):
                yield wrap(_T(gamma, rule, principal, children=tuple(kids), uid=uid))

    def _product(prems, trail, marks):
        if not prems:
            yield []
            return
        for first in search(prems[0], trail, marks):
            for rest in _product(prems[1:], trail, marks):
                yield [first] + rest

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 20000))
    tried = 0
    try:
        for tree in search(annotate(phi, m), [], []):
            tried += 1
            d = _materialize(tree)
            if check_bt(d, strict):
                return ProveResult(d, "found", explored[0], tried)
    except BudgetExceeded:
        return ProveResult(None, "budget", explored[0], tried)
    finally:
        sys.setrecursionlimit(limit)
    return ProveResult(None, "exhausted", explored[0], tried)


def _materialize(tree: _T) -> Derivation:
    b = _Builder(float("inf"))
    by_uid: dict = {}
    leaves = []

    def build(t):
        nid = b.add(t.sequent, t.rule, t.principal, t.k, t.pattern)
        if t.uid is not None:
            by_uid[t.uid] = nid
        if t.rule is None:
            leaves.append((nid, t.target))
        for c in t.children:
            b.link(nid, build(c))
        return nid

    root = build(tree)
    for nid, uid in leaves:
        target = by_uid[uid]
        tok = b.targets.setdefault(target, f"x{len(b.targets)}")
        b.nodes[nid].discharge = tok
    return b.finish(root)


def height(d: Derivation) -> int:
    depth = {d.root: 0}
    for nid in d.nodes:
        for c in d[nid].children:
            depth[c] = depth[nid] + 1
    return max(depth.values())
