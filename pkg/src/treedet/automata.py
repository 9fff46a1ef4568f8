"""Stream automata with Büchi, parity and Rabin acceptance.

Words are ultimately periodic and given as lassos ``u v^omega``.  Membership
is decided on the finite product of the automaton with the lasso positions.
"""

from __future__ import annotations

import itertools
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

from .cycleengine import is_cyclic_component, sccs
from .errors import (AlphabetMismatch, AutomatonFormatError, NondeterministicRabin,
                     NotDeterministic, UnknownLetter)


@dataclass(frozen=True)
class Buchi:
    accepting: frozenset


@dataclass(frozen=True)
class Parity:
    priority: dict  # state -> natural

    def __hash__(self):
        return hash(tuple(sorted(self.priority.items(), key=repr)))


@dataclass(frozen=True)
class RabinPair:
    green: frozenset
    bad: frozenset
    label: Hashable = None


@dataclass(frozen=True)
class Rabin:
    pairs: tuple  # of RabinPair


@dataclass(frozen=True)
class Lasso:
    stem: tuple
    loop: tuple

    def __post_init__(self):
        object.__setattr__(self, "stem", tuple(self.stem))
        object.__setattr__(self, "loop", tuple(self.loop))
        if not self.loop:
            raise ValueError("lasso loop must be nonempty")

    def letters(self):
        return set(self.stem) | set(self.loop)

    def __str__(self):
        return f"({' '.join(self.stem) or 'ε'}, {' '.join(self.loop)})"


class StreamAutomaton:
    """A finite automaton over infinite words.

    ``transitions`` maps ``(state, letter)`` to a frozenset of states;
    missing keys mean no successor.  Subclasses may override :meth:`delta`
    to compute transitions lazily.
    """

    def __init__(self, states: Iterable, alphabet: Iterable, transitions: dict,
                 initial, acceptance, deterministic: bool | None = None):
        self.states = list(states)
        self.alphabet = sorted(set(alphabet))
        self.transitions = {k: frozenset(v) for k, v in transitions.items()}
        self.initial = initial
        self.acceptance = acceptance
        known = set(self.states)
        if initial not in known:
            raise AutomatonFormatError(f"initial state {initial!r} is not a state")
        for (q, y), targets in self.transitions.items():
            if q not in known or not targets <= known:
                raise AutomatonFormatError(f"transition from {q!r} uses unknown states")
            if y not in self.alphabet:
                raise AutomatonFormatError(f"transition letter {y!r} not in alphabet")
        if isinstance(acceptance, Parity) and set(acceptance.priority) != known:
            raise AutomatonFormatError("parity acceptance must give every state a priority")
        for s in _acceptance_states(acceptance):
            if s not in known:
                raise AutomatonFormatError(f"acceptance mentions unknown state {s!r}")
        if deterministic is None:
            deterministic = self._check_deterministic()
        elif deterministic and not self._check_deterministic():
            raise NotDeterministic("automaton declared deterministic has |Δ(a,y)| ≠ 1")
        self.deterministic = deterministic
        self._masks = None

    def _check_deterministic(self) -> bool:
        return all(len(self.transitions.get((q, y), ())) == 1
                   for q in self.states for y in self.alphabet)

    def delta(self, q, y) -> frozenset:
        return self.transitions.get((q, y), frozenset())

    def priority(self, q) -> int:
        return self.acceptance.priority[q]

    def max_even_priority(self) -> int | None:
        evens = [p for p in self.acceptance.priority.values() if p % 2 == 0]
        return max(evens) if evens else None

    def step(self, q, y):
        """The unique successor in a deterministic automaton."""
        (r,) = self.delta(q, y)
        return r

    def __repr__(self):
        kind = type(self.acceptance).__name__
        return f"<StreamAutomaton {kind} |Q|={len(self.states)} |Σ|={len(self.alphabet)}>"


def _acceptance_states(acc):
    if isinstance(acc, Buchi):
        return acc.accepting
    if isinstance(acc, Parity):
        return acc.priority.keys()
    if isinstance(acc, Rabin):
        return set().union(*[p.green | p.bad for p in acc.pairs]) if acc.pairs else set()
    raise TypeError(f"unknown acceptance {acc!r}")


def _check_letters(aut: StreamAutomaton, w: Lasso):
    if aut.alphabet is None:
        return
    alpha = set(aut.alphabet)
    for y in itertools.chain(w.stem, w.loop):
        if y not in alpha:
            raise UnknownLetter(f"letter {y!r} not in alphabet")


def accepts_lasso(aut: StreamAutomaton, w: Lasso) -> bool:
    _check_letters(aut, w)
    acc = aut.acceptance
    if isinstance(acc, Rabin):
        if not aut.deterministic:
            raise NondeterministicRabin("Rabin acceptance needs a deterministic automaton")
        return _rabin_accepts(aut, w)
    word = w.stem + w.loop
    n, back = len(word), len(w.stem)

    def succ(node):
        q, i = node
        j = i + 1 if i + 1 < n else back
        return [(r, j) for r in aut.delta(q, word[i])]

    # reachable part of the product
    start = (aut.initial, 0)
    adj = {start: None}
    todo = [start]
    while todo:
        v = todo.pop()
        out = succ(v)
        adj[v] = out
        for x in out:
            if x not in adj:
                adj[x] = None
                todo.append(x)
    if isinstance(acc, Buchi):
        return any(is_cyclic_component(c, adj) and any(q in acc.accepting for q, _ in c)
                   for c in sccs(adj, adj))
    if isinstance(acc, Parity):
        pri = acc.priority
        for d in sorted({p for p in pri.values() if p % 2 == 0}):
            keep = [v for v in adj if pri[v[0]] >= d]
            for c in sccs(keep, adj):
                if is_cyclic_component(c, adj) and any(pri[q] == d for q, _ in c):
                    return True
        return False
    raise TypeError(f"unknown acceptance {acc!r}")


def _rabin_masks(aut: StreamAutomaton, q):
    """Bitmasks (green, bad) of the pairs a state belongs to, cached."""
    if aut._masks is None:
        aut._masks = {}
    m = aut._masks.get(q)
    if m is None:
        g = b = 0
        for i, p in enumerate(aut.acceptance.pairs):
            if q in p.green:
                g |= 1 << i
            if q in p.bad:
                b |= 1 << i
        m = aut._masks[q] = (g, b)
    return m


def _rabin_accepts(aut: StreamAutomaton, w: Lasso) -> bool:
    q = aut.initial
    for y in w.stem:
        q = _det_step(aut, q, y)
    seen = {}
    trace = []
    j = 0
    while (q, j) not in seen:
        seen[q, j] = len(trace)
        trace.append(q)
        q = _det_step(aut, q, w.loop[j])
        j = (j + 1) % len(w.loop)
    cycle = trace[seen[q, j]:]
    green = bad = 0
    for s in cycle:
        g, b = _rabin_masks(aut, s)
        green |= g
        bad |= b
    return bool(green & ~bad)


def _det_step(aut, q, y):
    targets = aut.delta(q, y)
    if len(targets) != 1:
        raise NotDeterministic(f"|Δ({q!r},{y!r})| = {len(targets)}")
    return next(iter(targets))


def run_prefix(aut: StreamAutomaton, w: Lasso, n: int) -> list:
    if not aut.deterministic:
        raise NotDeterministic("run_prefix needs a deterministic automaton")
    _check_letters(aut, w)
    q = aut.initial
    out = [q]
    for i in range(n):
        y = w.stem[i] if i < len(w.stem) else w.loop[(i - len(w.stem)) % len(w.loop)]
        q = _det_step(aut, q, y)
        out.append(q)
    return out


# -- lasso enumeration and comparison ---------------------------------------

def primitive_root(v: Sequence) -> tuple:
    v = tuple(v)
    n = len(v)
    for d in range(1, n + 1):
        if n % d == 0 and v[:d] * (n // d) == v:
            return v[:d]
    return v


def canonical_lasso(w: Lasso) -> Lasso:
    """A normal form: equal omega-words get equal canonical lassos."""
    u, v = list(w.stem), list(primitive_root(w.loop))
    while u and u[-1] == v[-1]:
        u.pop()
        v = v[-1:] + v[:-1]
    return Lasso(tuple(u), tuple(v))


def enumerate_lassos(alphabet: Sequence, max_stem: int, max_loop: int) -> list:
    out = {}
    for i in range(max_stem + 1):
        for stem in itertools.product(alphabet, repeat=i):
            for j in range(1, max_loop + 1):
                for loop in itertools.product(alphabet, repeat=j):
                    c = canonical_lasso(Lasso(stem, loop))
                    out.setdefault(c, None)
    return list(out)


def sample_lassos(alphabet: Sequence, max_stem: int, max_loop: int,
                  count: int, seed: int, batch: int = 0) -> list:
    rng = random.Random(f"{seed}:{batch}")
    out = {}
    for _ in range(count):
        stem = tuple(rng.choice(alphabet) for _ in range(rng.randint(0, max_stem)))
        loop = tuple(rng.choice(alphabet) for _ in range(rng.randint(1, max_loop)))
        out.setdefault(canonical_lasso(Lasso(stem, loop)), None)
    return list(out)


@dataclass
class Comparison:
    agree: bool
    tested: int
    counterexample: Lasso | None = None
    verdicts: tuple | None = None  # (verdict of a, verdict of b) at the counterexample

    def __bool__(self):
        return self.agree


def _first_disagreement(args):
    a, b, batch = args
    for i, w in enumerate(batch):
        x, y = accepts_lasso(a, w), accepts_lasso(b, w)
        if x != y:
            return i, (x, y)
    return None


def compare_on_lassos(a: StreamAutomaton, b: StreamAutomaton, max_stem: int,
                      max_loop: int, sampling: tuple | None = None,
                      jobs: int = 1) -> Comparison:
    """Check that ``a`` and ``b`` agree on every lasso within the bounds.

    With ``sampling=(count, seed)`` and more than ``count`` lassos in range,
    a seeded random sample of ``count`` lassos is checked instead.
    """
    if set(a.alphabet) != set(b.alphabet):
        raise AlphabetMismatch(f"{a.alphabet} vs {b.alphabet}")
    alphabet = sorted(a.alphabet)
    k = len(alphabet)
    total = sum(k ** i for i in range(max_stem + 1)) * sum(k ** j for j in range(1, max_loop + 1))
    if sampling is not None and total > sampling[0]:
        lassos = sample_lassos(alphabet, max_stem, max_loop, sampling[0], sampling[1])
    else:
        lassos = enumerate_lassos(alphabet, max_stem, max_loop)
    if jobs <= 1:
        hit = _first_disagreement((a, b, lassos))
        if hit is None:
            return Comparison(True, len(lassos))
        i, verdicts = hit
        return Comparison(False, i + 1, lassos[i], verdicts)
    size = max(1, -(-len(lassos) // (4 * jobs)))
    batches = [lassos[i:i + size] for i in range(0, len(lassos), size)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(_first_disagreement, [(a, b, bt) for bt in batches]))
    for n, (bt, hit) in enumerate(zip(batches, results)):
        if hit is not None:
            i, verdicts = hit
            return Comparison(False, n * size + i + 1, bt[i], verdicts)
    return Comparison(True, len(lassos))


# -- text format --------------------------------------------------------------

_FIELDS = ("states", "alphabet", "initial", "deterministic", "acceptance", "transitions")


def parse_automaton(text: str) -> StreamAutomaton:
    fields: dict = {}
    triples = []
    in_transitions = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rest = line.partition(":")
        if sep and key.strip() in _FIELDS:
            key = key.strip()
            if key in fields:
                raise AutomatonFormatError(f"line {lineno}: duplicate field {key!r}")
            fields[key] = rest.strip()
            in_transitions = key == "transitions"
            if in_transitions and rest.strip():
                raise AutomatonFormatError(f"line {lineno}: transitions go on their own lines")
            continue
        if not in_transitions:
            raise AutomatonFormatError(f"line {lineno}: unexpected {line!r}")
        parts = line.split()
        if len(parts) != 3:
            raise AutomatonFormatError(f"line {lineno}: expected 'src letter dst'")
        triples.append(tuple(parts))
    for key in ("states", "alphabet", "initial", "acceptance"):
        if key not in fields:
            raise AutomatonFormatError(f"missing field {key!r}")
    states = fields["states"].split()
    alphabet = fields["alphabet"].split()
    if len(set(states)) != len(states):
        raise AutomatonFormatError("duplicate state names")
    trans: dict = {}
    for q, y, r in triples:
        trans.setdefault((q, y), set()).add(r)
    acceptance = _parse_acceptance(fields["acceptance"])
    det = fields.get("deterministic")
    if det not in (None, "yes", "no"):
        raise AutomatonFormatError(f"deterministic must be yes or no, got {det!r}")
    declared = None if det is None else det == "yes"
    aut = StreamAutomaton(states, alphabet, trans, fields["initial"], acceptance,
                          deterministic=True if declared else None)
    if declared is False:
        aut.deterministic = aut._check_deterministic()
    return aut


def _parse_acceptance(spec: str):
    kind, _, rest = spec.partition(" ")
    rest = rest.strip()
    if kind == "buchi":
        if not rest.startswith("F="):
            raise AutomatonFormatError("buchi acceptance needs F=...")
        names = rest[2:]
        return Buchi(frozenset(x for x in names.split(",") if x))
    if kind == "parity":
        pri = {}
        for item in rest.split():
            q, sep, p = item.partition(":")
            if not sep or not p.isdigit():
                raise AutomatonFormatError(f"bad priority entry {item!r}")
            pri[q] = int(p)
        return Parity(pri)
    if kind == "rabin":
        pairs = []
        for body in _paren_groups(rest):
            g, sep, b = body.partition(";")
            if not sep:
                raise AutomatonFormatError(f"bad Rabin pair ({body})")
            pairs.append(RabinPair(frozenset(x for x in g.split(",") if x),
                                   frozenset(x for x in b.split(",") if x)))
        return Rabin(tuple(pairs))
    raise AutomatonFormatError(f"unknown acceptance kind {kind!r}")


def _paren_groups(s: str):
    out = []
    i = 0
    while i < len(s):
        if s[i].isspace():
            i += 1
            continue
        if s[i] != "(":
            raise AutomatonFormatError(f"expected '(' in Rabin pairs at {s[i:]!r}")
        j = s.find(")", i)
        if j < 0:
            raise AutomatonFormatError("unclosed Rabin pair")
        out.append(s[i + 1:j])
        i = j + 1
    return out


def _state_key(q):
    return (len(str(q)), str(q))


def format_automaton(aut: StreamAutomaton) -> str:
    lines = [
        "states: " + " ".join(map(str, aut.states)),
        "alphabet: " + " ".join(aut.alphabet),
        f"initial: {aut.initial}",
        "deterministic: " + ("yes" if aut.deterministic else "no"),
    ]
    acc = aut.acceptance
    if isinstance(acc, Buchi):
        lines.append("acceptance: buchi F=" + ",".join(sorted(map(str, acc.accepting), key=_state_key)))
    elif isinstance(acc, Parity):
        lines.append("acceptance: parity " + " ".join(f"{q}:{acc.priority[q]}"
                                                       for q in aut.states if q in acc.priority))
    else:
        order = {q: i for i, q in enumerate(aut.states)}
        groups = []
        for p in acc.pairs:
            if p.label is not None:
                lines.append(f"# pair {len(groups)}: {_label_text(p.label)}")
            g = ",".join(str(q) for q in sorted(p.green, key=order.get))
            b = ",".join(str(q) for q in sorted(p.bad, key=order.get))
            groups.append(f"({g};{b})")
        lines.append("acceptance: rabin " + " ".join(groups))
    lines.append("transitions:")
    for q in aut.states:
        for y in aut.alphabet:
            for r in sorted(aut.delta(q, y), key=_state_key):
                lines.append(f"{q} {y} {r}")
    return "\n".join(lines) + "\n"


def _label_text(label) -> str:
    if isinstance(label, tuple):
        k, s = label
        return f"k={k} s={s or 'ε'}"
    if isinstance(label, str):
        return f"s={label or 'ε'}"
    return str(label)


def to_dot(aut: StreamAutomaton, name: str = "A") -> str:
    acc = aut.acceptance
    lines = [f"digraph {name} {{", "  rankdir=LR;", '  __init [shape=point, label=""];']
    for q in aut.states:
        attrs = []
        if isinstance(acc, Buchi) and q in acc.accepting:
            attrs.append("shape=doublecircle")
        label = str(q)
        if isinstance(acc, Parity):
            label += f" / {acc.priority.get(q, 0)}"
        attrs.append(f'label="{label}"')
        lines.append(f'  "{q}" [{", ".join(attrs)}];')
    lines.append(f'  __init -> "{aut.initial}";')
    edges: dict = {}
    for q in aut.states:
        for y in aut.alphabet:
            for r in aut.delta(q, y):
                edges.setdefault((q, r), []).append(y)
    for (q, r), ys in edges.items():
        lines.append(f'  "{q}" -> "{r}" [label="{",".join(ys)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
