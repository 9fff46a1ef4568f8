"""Modal mu-calculus formulas: syntax, parsing, closure and priorities.

Formulas are immutable and hashable.  Bound variables are represented by
:class:`Prop` occurrences, as in the usual presentation where variables
and propositions come from the same set; the parser guarantees that every
binder name is used only as a bound variable and that binders never shadow
each other, so substitution can be done naively without capture.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import (
    FormulaSyntaxError,
    NegativeBoundVariable,
    NoFixpointOnCycle,
    NotAFixpoint,
)

MU = "mu"
NU = "nu"


class Formula:
    __slots__ = ("_h", "_s")

    def _fields(self):
        return ()

    def _init_hash(self):
        self._h = hash((type(self).__name__,) + self._fields())
        self._s = None

    def __hash__(self):
        return self._h

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other) or self._h != other._h:
            return False
        return self._fields() == other._fields()

    def __ne__(self, other):
        return not self == other

    def __lt__(self, other):
        return sort_key(self) < sort_key(other)

    def __str__(self):
        if self._s is None:
            self._s = render(self)
        return self._s

    def __repr__(self):
        return f"<{str(self)}>"

    def children(self) -> tuple:
        return ()

    def __reduce__(self):
        return (type(self), self._fields())


class Prop(Formula):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self._set(name)
        self._init_hash()

    def _set(self, name):
        self.name = name

    def _fields(self):
        return (self.name,)


class NegProp(Formula):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self._set(name)
        self._init_hash()

    def _set(self, name):
        self.name = name

    def _fields(self):
        return (self.name,)


class Top(Formula):
    __slots__ = ()

    def __init__(self):
        self._init_hash()

    def _set(self):
        pass


class Bot(Formula):
    __slots__ = ()

    def __init__(self):
        self._init_hash()

    def _set(self):
        pass


class _Binary(Formula):
    __slots__ = ("left", "right")

    def __init__(self, left: Formula, right: Formula):
        self._set(left, right)
        self._init_hash()

    def _set(self, left, right):
        self.left = left
        self.right = right

    def _fields(self):
        return (self.left, self.right)

    def children(self):
        return (self.left, self.right)


class Or(_Binary):
    __slots__ = ()


class And(_Binary):
    __slots__ = ()


class _Modal(Formula):
    __slots__ = ("body",)

    def __init__(self, body: Formula):
        self._set(body)
        self._init_hash()

    def _set(self, body):
        self.body = body

    def _fields(self):
        return (self.body,)

    def children(self):
        return (self.body,)


class Dia(_Modal):
    __slots__ = ()


class Box(_Modal):
    __slots__ = ()


class Fix(Formula):
    """A fixpoint formula ``op var. body`` with ``op`` in {"mu", "nu"}."""

    __slots__ = ("op", "var", "body")

    def __init__(self, op: str, var: str, body: Formula):
        if op not in (MU, NU):
            raise ValueError(f"unknown fixpoint operator {op!r}")
        self._set(op, var, body)
        self._init_hash()

    def _set(self, op, var, body):
        self.op = op
        self.var = var
        self.body = body

    def _fields(self):
        return (self.op, self.var, self.body)

    def children(self):
        return (self.body,)


TOP = Top()
BOT = Bot()


def mu(var, body):
    return Fix(MU, var, body)


def nu(var, body):
    return Fix(NU, var, body)


def is_fixpoint(f: Formula) -> bool:
    return isinstance(f, Fix)


# --------------------------------------------------------------------------
# rendering

_PREC_FIX, _PREC_OR, _PREC_AND, _PREC_UNARY = 0, 1, 2, 3


def render(f: Formula, ctx: int = _PREC_FIX) -> str:
    if isinstance(f, Prop):
        return f.name
    if isinstance(f, NegProp):
        return "~" + f.name
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Bot):
        return "false"
    if isinstance(f, Or):
        text = f"{render(f.left, _PREC_AND)} | {render(f.right, _PREC_OR)}"
        prec = _PREC_OR
    elif isinstance(f, And):
        text = f"{render(f.left, _PREC_UNARY)} & {render(f.right, _PREC_AND)}"
        prec = _PREC_AND
    elif isinstance(f, Dia):
        return "<>" + render(f.body, _PREC_UNARY)
    elif isinstance(f, Box):
        return "[]" + render(f.body, _PREC_UNARY)
    elif isinstance(f, Fix):
        text = f"{f.op} {f.var}. {render(f.body, _PREC_FIX)}"
        prec = _PREC_FIX
    else:
        raise TypeError(f"not a formula: {f!r}")
    return text if prec >= ctx else f"({text})"


def sort_key(f: Formula) -> str:
    return str(f)


def sorted_formulas(formulas: Iterable[Formula]) -> list:
    return sorted(formulas, key=sort_key)


# --------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<op><>|\[\]|[()|&~.]|[⊤⊥¬∧∨◇□μν])|(?P<ident>[A-Za-z_][A-Za-z0-9_']*))"
)
_ALIASES = {"⊤": "true", "⊥": "false", "¬": "~", "∧": "&", "∨": "|",
            "◇": "<>", "□": "[]", "μ": "mu", "ν": "nu"}
_KEYWORDS = {"true", "false", "mu", "nu"}


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if not m:
            stripped = len(text[pos:]) - len(text[pos:].lstrip())
            raise FormulaSyntaxError(f"unexpected character {text[pos + stripped]!r}",
                                     pos + stripped)
        start = m.start("op") if m.group("op") else m.start("ident")
        tok = m.group("op") or m.group("ident")
        out.append((_ALIASES.get(tok, tok), start))
        pos = m.end()
    out.append(("<eof>", len(text)))
    return out


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i][0]

    def pos(self):
        return self.toks[self.i][1]

    def take(self, expected=None):
        tok, pos = self.toks[self.i]
        if expected is not None and tok != expected:
            raise FormulaSyntaxError(f"expected {expected!r}, found {tok!r}", pos)
        self.i += 1
        return tok

    def formula(self):
        if self.peek() in (MU, NU):
            return self.binder()
        return self.disjunction()

    def binder(self):
        op = self.take()
        pos = self.pos()
        var = self.take()
        if var in _KEYWORDS or not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_']*", var):
            raise FormulaSyntaxError(f"expected a variable name, found {var!r}", pos)
        self.take(".")
        return Fix(op, var, self.formula())

    def disjunction(self):
        left = self.conjunction()
        if self.peek() == "|":
            self.take()
            right = self.binder() if self.peek() in (MU, NU) else self.disjunction()
            return Or(left, right)
        return left

    def conjunction(self):
        left = self.unary()
        if self.peek() == "&":
            self.take()
            right = self.binder() if self.peek() in (MU, NU) else self.conjunction()
            return And(left, right)
        return left

    def unary(self):
        tok = self.peek()
        if tok in ("<>", "[]"):
            self.take()
            body = self.binder() if self.peek() in (MU, NU) else self.unary()
            return Dia(body) if tok == "<>" else Box(body)
        if tok == "~":
            self.take()
            pos = self.pos()
            name = self.take()
            if name in _KEYWORDS or not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_']*", name):
                raise FormulaSyntaxError("negation applies to propositions only", pos)
            return NegProp(name)
        if tok == "(":
            self.take()
            f = self.formula()
            self.take(")")
            return f
        if tok == "true":
            self.take()
            return TOP
        if tok == "false":
            self.take()
            return BOT
        if tok == "<eof>" or tok in _KEYWORDS or not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_']*", tok):
            raise FormulaSyntaxError(f"unexpected token {tok!r}", self.pos())
        self.take()
        return Prop(tok)


def check_binding(f: Formula, allow_shadowing: bool = False) -> None:
    """Reject negated bound variables, shadowing and free/bound name clashes.

    Unfolding a closed fixpoint into its own body can nest a binder inside
    one of the same name; such closure members are read back with
    ``allow_shadowing``.  Substitution is still capture-free there because
    the substituted formula is closed.
    """
    bound_names = set()
    free_names = set()

    def walk(g, scope):
        if isinstance(g, Prop):
            if g.name not in scope:
                free_names.add(g.name)
        elif isinstance(g, NegProp):
            if g.name in scope:
                raise NegativeBoundVariable(f"~{g.name} occurs under a binder of {g.name}")
            free_names.add(g.name)
        elif isinstance(g, Fix):
            if g.var in scope and not allow_shadowing:
                raise FormulaSyntaxError(f"binder {g.var} shadows an enclosing binder", 0)
            bound_names.add(g.var)
            walk(g.body, scope | {g.var})
        else:
            for c in g.children():
                walk(c, scope)

    walk(f, frozenset())
    clash = bound_names & free_names
    if clash:
        raise FormulaSyntaxError(
            f"name(s) {sorted(clash)} used both free and bound", 0)


def parse_formula(text: str, allow_shadowing: bool = False) -> Formula:
    p = _Parser(text)
    f = p.formula()
    if p.peek() != "<eof>":
        raise FormulaSyntaxError(f"unexpected token {p.peek()!r}", p.pos())
    check_binding(f, allow_shadowing)
    return f


def parse_sequent(lines: Iterable[str]) -> frozenset:
    """One formula per non-blank line; ``#`` starts a comment."""
    out = []
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(parse_formula(line))
    return frozenset(out)


# --------------------------------------------------------------------------
# substitution, unfolding, negation


def substitute(f: Formula, var: str, g: Formula) -> Formula:
    """Replace the free occurrences of ``var`` in ``f`` by ``g``."""
    if isinstance(f, Prop):
        return g if f.name == var else f
    if isinstance(f, NegProp):
        if f.name == var:
            raise NegativeBoundVariable(f"cannot substitute into ~{var}")
        return f
    if isinstance(f, (Top, Bot)):
        return f
    if isinstance(f, Or):
        return Or(substitute(f.left, var, g), substitute(f.right, var, g))
    if isinstance(f, And):
        return And(substitute(f.left, var, g), substitute(f.right, var, g))
    if isinstance(f, Dia):
        return Dia(substitute(f.body, var, g))
    if isinstance(f, Box):
        return Box(substitute(f.body, var, g))
    if isinstance(f, Fix):
        if f.var == var:
            return f
        return Fix(f.op, f.var, substitute(f.body, var, g))
    raise TypeError(f"not a formula: {f!r}")


def unfold(xi: Formula) -> Formula:
    if not isinstance(xi, Fix):
        raise NotAFixpoint(f"{xi} is not a fixpoint formula")
    return substitute(xi.body, xi.var, xi)


def negate(f: Formula) -> Formula:
    """The dual formula in negation normal form (bound variables stay positive)."""

    def go(g, bound):
        if isinstance(g, Prop):
            return g if g.name in bound else NegProp(g.name)
        if isinstance(g, NegProp):
            return Prop(g.name)
        if isinstance(g, Top):
            return BOT
        if isinstance(g, Bot):
            return TOP
        if isinstance(g, Or):
            return And(go(g.left, bound), go(g.right, bound))
        if isinstance(g, And):
            return Or(go(g.left, bound), go(g.right, bound))
        if isinstance(g, Dia):
            return Box(go(g.body, bound))
        if isinstance(g, Box):
            return Dia(go(g.body, bound))
        if isinstance(g, Fix):
            return Fix(NU if g.op == MU else MU, g.var, go(g.body, bound | {g.var}))
        raise TypeError(f"not a formula: {g!r}")

    return go(f, frozenset())


def subformulas(f: Formula) -> set:
    out = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if g in out:
            continue
        out.add(g)
        stack.extend(g.children())
    return out


def successors(f: Formula) -> tuple:
    """The formulas ``g`` with ``f ->_C g``."""
    if isinstance(f, Fix):
        return (unfold(f),)
    return f.children()


# --------------------------------------------------------------------------
# closure


@dataclass
class ClosureTable:
    roots: frozenset
    members: frozenset
    edges: frozenset
    fix: list
    omega: dict
    m: int | None
    dependence: frozenset = field(default_factory=frozenset)

    def succ(self, f: Formula) -> tuple:
        return successors(f)

    def is_step(self, f: Formula, g: Formula) -> bool:
        return (f, g) in self.edges

    def priority(self, f: Formula) -> int:
        return self.omega[f]


def closure(phi: Iterable[Formula]) -> ClosureTable:
    roots = frozenset(phi)
    members = set()
    edges = set()
    stack = list(roots)
    while stack:
        f = stack.pop()
        if f in members:
            continue
        members.add(f)
        for g in successors(f):
            edges.add((f, g))
            if g not in members:
                stack.append(g)

    fix = sorted_formulas(f for f in members if isinstance(f, Fix))
    reach = _reachability(fix, edges)
    subs = {f: subformulas(f) for f in fix}
    # F <_Phi G : same closure and F a proper subformula of G
    below = {g: [f for f in fix if f != g and f in subs[g]
                 and g in reach[f] and f in reach[g]] for g in fix}
    depth: dict = {}

    def d(g):
        if g not in depth:
            depth[g] = max((d(f) + 1 for f in below[g]), default=0)
        return depth[g]

    omega = {}
    for g in fix:
        omega[g] = 2 * d(g) if g.op == NU else 2 * d(g) + 1
    nus = [omega[g] for g in fix if g.op == NU]
    m = max(nus) if nus else None
    dependence = frozenset((f, g) for g in fix for f in below[g])
    return ClosureTable(roots, frozenset(members), frozenset(edges), fix, omega, m,
                        dependence)


def _reachability(sources, edges) -> dict:
    adj: dict = {}
    for a, b in edges:
        adj.setdefault(a, []).append(b)
    out = {}
    for s in sources:
        seen = {s}
        stack = [s]
        while stack:
            x = stack.pop()
            for y in adj.get(x, ()):
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        out[s] = seen
    return out


def trace_classify(cycle: Sequence[Formula], table: ClosureTable | None = None) -> str:
    """Kind ("mu" or "nu") of the trace that repeats ``cycle`` forever."""
    if not cycle:
        raise ValueError("empty cycle")
    if table is None:
        table = closure(cycle)
    unfolded = []
    n = len(cycle)
    for i, f in enumerate(cycle):
        g = cycle[(i + 1) % n]
        if g not in successors(f):
            raise ValueError(f"{f} ->_C {g} does not hold")
        if isinstance(f, Fix):
            unfolded.append(f)
    if not unfolded:
        raise NoFixpointOnCycle("no fixpoint is unfolded on the cycle")
    return min(unfolded, key=table.priority).op
