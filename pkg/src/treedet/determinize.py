"""Binary-tree determinization of Büchi and parity automata into Rabin automata.

A Büchi macrostate assigns each live source state a binary string; the
strings are the leaves of a tree whose nodes carry a colour.  A parity
macrostate assigns each live state a tuple of strings, one per even priority
``0, 2, ..., m``, and keeps one coloured tree per position.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from typing import Callable

from .automata import Buchi, Rabin, RabinPair, StreamAutomaton
from .bitstring import (epsilon_tseq, format_bits, is_all_zeros, min_leaf,
                        positions, working_tree)
from .errors import UnknownLetter

WHITE, GREEN, RED = "white", "green", "red"


def state_key(q):
    """A total, deterministic order on heterogeneous state identifiers."""
    return (type(q).__name__, str(q))


@dataclass(frozen=True)
class Macrostate:
    assignment: tuple  # sorted ((state, bitstring), ...)
    colouring: tuple   # sorted ((bitstring, colour), ...)

    @property
    def f(self) -> dict:
        return dict(self.assignment)

    @property
    def c(self) -> dict:
        return dict(self.colouring)

    @property
    def tree(self) -> frozenset:
        return frozenset(s for s, _ in self.colouring)

    @staticmethod
    def make(f: dict, c: dict) -> "Macrostate":
        return Macrostate(tuple(sorted(f.items(), key=lambda kv: state_key(kv[0]))),
                          tuple(sorted(c.items())))


@dataclass(frozen=True)
class ParityMacrostate:
    assignment: tuple  # sorted ((state, tseq), ...)
    colourings: tuple  # per position index: sorted ((bitstring, colour), ...)
    m: int | None

    @property
    def f(self) -> dict:
        return dict(self.assignment)

    def c(self, k: int) -> dict:
        return dict(self.colourings[k // 2])

    def tree(self, k: int) -> frozenset:
        return frozenset(s for s, _ in self.colourings[k // 2])

    @staticmethod
    def make(f: dict, cs: list, m) -> "ParityMacrostate":
        return ParityMacrostate(tuple(sorted(f.items(), key=lambda kv: state_key(kv[0]))),
                                tuple(tuple(sorted(c.items())) for c in cs), m)


def _witnesses(tree, patch: bool):
    out = []
    for t in tree:
        has0, has1 = t + "0" in tree, t + "1" in tree
        if has0 and not has1:
            out.append(t)
        elif has1 and not has0 and not (patch and is_all_zeros(t)):
            out.append(t)
    return out


def compress_colour(assign: dict, patch: bool = False,
                    choose: Callable | None = None) -> tuple[dict, dict]:
    """Step 4 on one tree: compress single-child nodes and colour.

    ``assign`` maps keys to strings.  With ``patch`` the working tree gets the
    all-zeros patch and all-zeros nodes are never case-(b) witnesses.
    ``choose`` picks a witness from the sorted candidate list; the default
    takes the least one.
    """
    assign = dict(assign)
    marks: dict = {}
    tree = working_tree(assign.values(), patch)
    while True:
        cands = _witnesses(tree, patch)
        if not cands:
            break
        cands.sort()
        t = choose(cands) if choose else cands[0]
        case_b = t + "0" not in tree
        child = t + ("1" if case_b else "0")
        n = len(child)
        assign = {q: t + s[n:] if s.startswith(child) else s for q, s in assign.items()}
        tree = working_tree(assign.values(), patch)
        if case_b:
            s = t
            while True:
                if marks.get(s) != RED:
                    marks[s] = GREEN
                if not s.endswith("0"):
                    break
                s = s[:-1]
        for s in tree:
            if len(s) > len(t) and s.startswith(t):
                marks[s] = RED
    return assign, {s: marks.get(s, WHITE) for s in tree}


def _check_letter(src, y):
    if src.alphabet is not None and y not in src.alphabet:
        raise UnknownLetter(f"letter {y!r} not in alphabet")


def det_buchi_step(S: Macrostate, y, src: StreamAutomaton,
                   choose: Callable | None = None) -> Macrostate:
    _check_letter(src, y)
    F = src.acceptance.accepting
    moved: dict = {}
    for a, s in S.assignment:
        for b in src.delta(a, y):
            t = s + ("1" if b in F else "0")
            # resolve: keep the lexicographically greatest string per state
            if b not in moved or moved[b] < t:
                moved[b] = t
    f, c = compress_colour(moved, patch=False, choose=choose)
    return Macrostate.make(f, c)


def initial_macrostate(src: StreamAutomaton) -> Macrostate:
    return Macrostate.make({src.initial: ""}, {"": WHITE})


def _explore(start, step, alphabet):
    ids = {start: 0}
    order = [start]
    edges = {}
    queue = deque([start])
    while queue:
        S = queue.popleft()
        for y in alphabet:
            T = step(S, y)
            if T not in ids:
                ids[T] = len(order)
                order.append(T)
                queue.append(T)
            edges[ids[S], y] = ids[T]
    return order, edges


def det_buchi(src: StreamAutomaton) -> tuple[StreamAutomaton, dict]:
    alphabet = sorted(src.alphabet)
    order, edges = _explore(initial_macrostate(src),
                            lambda S, y: det_buchi_step(S, y, src), alphabet)
    names = [f"m{i}" for i in range(len(order))]
    strings = sorted({s for S in order for s in S.tree})
    pairs = []
    for s in strings:
        green = frozenset(names[i] for i, S in enumerate(order) if S.c.get(s) == GREEN)
        bad = frozenset(names[i] for i, S in enumerate(order) if S.c.get(s, RED) == RED)
        pairs.append(RabinPair(green, bad, label=s))
    trans = {(names[i], y): {names[j]} for (i, y), j in edges.items()}
    aut = StreamAutomaton(names, alphabet, trans, names[0], Rabin(tuple(pairs)),
                          deterministic=True)
    return aut, dict(zip(names, order))


def parity_to_buchi(src: StreamAutomaton) -> StreamAutomaton:
    pri = src.acceptance.priority
    m = src.max_even_priority()
    ks = list(positions(m))
    all_str = all(isinstance(q, str) for q in src.states)

    def copy(q, k):
        return f"{q}@{k}" if all_str else (q, k)

    states = list(src.states)
    for k in ks:
        states += [copy(q, k) for q in src.states if pri[q] >= k]
    trans: dict = {}
    for q in src.states:
        for y in src.alphabet:
            targets = src.delta(q, y)
            if not targets:
                continue
            out = set(targets)
            for k in ks:
                out |= {copy(r, k) for r in targets if pri[r] >= k}
                if pri[q] >= k:
                    trans[copy(q, k), y] = {copy(r, k) for r in targets if pri[r] >= k}
            trans[q, y] = out
    trans = {key: v for key, v in trans.items() if v}
    accepting = frozenset(copy(q, k) for k in ks for q in src.states if pri[q] == k)
    return StreamAutomaton(states, src.alphabet, trans, src.initial, Buchi(accepting))


def initial_parity_macrostate(src: StreamAutomaton) -> ParityMacrostate:
    m = src.max_even_priority()
    return ParityMacrostate.make({src.initial: epsilon_tseq(m)},
                                 [{"": WHITE} for _ in positions(m)], m)


def det_parity_step(S: ParityMacrostate, y, src: StreamAutomaton,
                    choose: Callable | None = None) -> ParityMacrostate:
    _check_letter(src, y)
    m = S.m
    ks = list(positions(m))
    # minimal leaves of the current trees, computed on demand for Reduce
    minl: dict = {}

    def min_of(j):
        if j not in minl:
            minl[j] = min_leaf(S.tree(j))
        return minl[j]

    moved: dict = {}
    for a, sigma in S.assignment:
        for b in src.delta(a, y):
            p = src.priority(b)
            tau = tuple(min_of(j) + ("1" if j == p else "0") if j > p
                        else s + ("1" if j == p else "0")
                        for j, s in zip(ks, sigma))
            if b not in moved or moved[b] < tau:
                moved[b] = tau
    cs = []
    for i, k in enumerate(ks):
        proj, c = compress_colour({b: tau[i] for b, tau in moved.items()},
                                  patch=True, choose=choose)
        for b, s in proj.items():
            tau = moved[b]
            if tau[i] != s:
                moved[b] = tau[:i] + (s,) + tau[i + 1:]
        cs.append(c)
    return ParityMacrostate.make(moved, cs, m)


def det_parity(src: StreamAutomaton) -> tuple[StreamAutomaton, dict]:
    alphabet = sorted(src.alphabet)
    order, edges = _explore(initial_parity_macrostate(src),
                            lambda S, y: det_parity_step(S, y, src), alphabet)
    names = [f"m{i}" for i in range(len(order))]
    m = order[0].m
    pairs = []
    for k in positions(m):
        strings = sorted({s for S in order for s in S.tree(k)})
        for s in strings:
            green = frozenset(names[i] for i, S in enumerate(order) if S.c(k).get(s) == GREEN)
            bad = frozenset(names[i] for i, S in enumerate(order)
                            if S.c(k).get(s, RED) == RED)
            pairs.append(RabinPair(green, bad, label=(k, s)))
    trans = {(names[i], y): {names[j]} for (i, y), j in edges.items()}
    aut = StreamAutomaton(names, alphabet, trans, names[0], Rabin(tuple(pairs)),
                          deterministic=True)
    return aut, dict(zip(names, order))


def random_chooser(seed) -> Callable:
    rng = random.Random(seed)
    return lambda cands: rng.choice(cands)


# -- rendering ---------------------------------------------------------------

def _render_tree(f_items, colouring) -> list:
    leaves: dict = {}
    for q, s in f_items:
        leaves.setdefault(s, []).append(str(q))
    lines = []
    for s, colour in colouring:
        who = leaves.get(s)
        tail = f"  {{{', '.join(who)}}}" if who else ""
        lines.append(f"    {format_bits(s)}: {colour}{tail}")
    return lines


def render_macrostate(S) -> str:
    if isinstance(S, Macrostate):
        return "\n".join(["  tree:"] + _render_tree(S.assignment, S.colouring))
    lines = ["  states: " + ", ".join(
        f"{q} -> ({', '.join(format_bits(s) for s in sigma)})" for q, sigma in S.assignment)]
    for i, k in enumerate(positions(S.m)):
        items = [(q, sigma[i]) for q, sigma in S.assignment]
        lines.append(f"  tree {k}:")
        lines += _render_tree(items, S.colourings[i])
    return "\n".join(lines)


def render_dictionary(states: dict) -> str:
    """Stable text rendering: each node line is ``string: colour {states}``."""
    out = []
    for name, S in states.items():
        out.append(f"{name}")
        out.append(render_macrostate(S))
    return "\n".join(out) + "\n"
