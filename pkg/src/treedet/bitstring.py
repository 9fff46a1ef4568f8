"""Binary strings, binary trees, treetops and annotation tuples.

Binary strings are plain ``str`` values over ``"0"`` and ``"1"``; the empty
string is the root of every tree.  Python's string order already is the
lexicographic order with ``"0" < "1"`` in which a proper prefix precedes its
extensions, so ``lex_less`` is just ``<``.

An annotation tuple ``(s_0, s_2, ..., s_m)`` is a tuple of binary strings;
position ``k`` (always even) is stored at tuple index ``k // 2``.
"""

from __future__ import annotations

from typing import Iterable

from .errors import EmptyTree, IndexMismatch, NotATreetop, PrefixMismatch

BitString = str
TSeq = tuple  # tuple[BitString, ...]


def lex_less(s: BitString, t: BitString) -> bool:
    return s < t


def is_prefix(s: BitString, t: BitString) -> bool:
    return t.startswith(s)


def is_strict_prefix(s: BitString, t: BitString) -> bool:
    return len(s) < len(t) and t.startswith(s)


def is_all_zeros(s: BitString) -> bool:
    # the empty string counts as 0^0
    return "1" not in s


def substitute(s: BitString, t: BitString, r: BitString) -> BitString:
    """Replace the prefix ``t`` of ``s`` by ``r``."""
    if not s.startswith(t):
        raise PrefixMismatch(f"{t!r} is not a prefix of {s!r}")
    return r + s[len(t):]


def prefix_closure(strings: Iterable[BitString]) -> frozenset:
    out = set()
    for s in strings:
        for i in range(len(s), -1, -1):
            p = s[:i]
            if p in out:
                break
            out.add(p)
    return frozenset(out)


def working_tree(strings: Iterable[BitString], patch: bool = False) -> frozenset:
    """Prefix closure of ``strings``, optionally with the all-zeros patch.

    The patch adds ``0^j 0`` whenever ``0^j 1`` is in the closure, i.e. it
    restores a missing minimal leaf.  No tree invariant is checked, so this
    is usable on the intermediate trees of a compression pass.
    """
    closed = prefix_closure(strings)
    if not patch:
        return closed
    extra = []
    z = ""
    while z + "1" in closed or z + "0" in closed:
        if z + "1" in closed and z + "0" not in closed:
            extra.append(z + "0")
        z += "0"
    return closed.union(extra) if extra else closed


def is_binary_tree(nodes: Iterable[BitString]) -> bool:
    nodes = set(nodes)
    for s in nodes:
        if s and s[:-1] not in nodes:
            return False
        if (s + "0" in nodes) != (s + "1" in nodes):
            return False
    return True


def is_antichain(strings: Iterable[BitString]) -> bool:
    ordered = sorted(set(strings))
    # in sorted order a prefix sits right before some extension of it
    return all(not b.startswith(a) for a, b in zip(ordered, ordered[1:]))


def tree_of(leaves: Iterable[BitString], patch: bool = True) -> frozenset:
    """The binary tree spanned by a treetop (``patch``) or a full leaf set."""
    leaves = list(leaves)
    if not is_antichain(leaves):
        raise NotATreetop(f"strings are not pairwise prefix-free: {sorted(leaves)}")
    tree = working_tree(leaves, patch)
    if not is_binary_tree(tree):
        raise NotATreetop(f"{sorted(leaves)} does not span a binary tree")
    return tree


def leaves_of(tree: Iterable[BitString]) -> frozenset:
    tree = set(tree)
    return frozenset(s for s in tree if s + "0" not in tree and s + "1" not in tree)


def min_leaf(tree: Iterable[BitString]) -> BitString:
    tree = set(tree)
    if not tree:
        raise EmptyTree("empty tree has no minimal leaf")
    s = ""
    while s + "0" in tree:
        s += "0"
    return s


def occurs(s: BitString, strings: Iterable[BitString]) -> bool:
    """True iff ``s`` is a prefix of one of ``strings``."""
    return any(t.startswith(s) for t in strings)


def tseq_less(sigma: TSeq, tau: TSeq) -> bool:
    if len(sigma) != len(tau):
        raise IndexMismatch(f"annotations of different length: {sigma!r}, {tau!r}")
    for s, t in zip(sigma, tau):
        if s != t:
            return s < t
    return False


def tseq_length(m: int | None) -> int:
    """Number of components of an annotation for maximal even priority ``m``."""
    return 0 if m is None else m // 2 + 1


def positions(m: int | None) -> range:
    """The even positions ``0, 2, ..., m``."""
    return range(0) if m is None else range(0, m + 1, 2)


def epsilon_tseq(m: int | None) -> TSeq:
    return ("",) * tseq_length(m)


def format_bits(s: BitString) -> str:
    return s if s else "ε"
