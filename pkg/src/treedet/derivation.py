"""Finite derivation trees with back-edges, shared by the NW and BT systems.

A node is labelled by a rule name, or, for a discharged leaf, by nothing
(``rule is None``) plus a discharge token.  A companion carries the rule
``"Dis"`` and the token it discharges.  Plain sequents are frozensets of
formulas; annotated sequents are frozensets of ``(formula, annotation)``
pairs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .bitstring import format_bits
from .errors import StructuralError, TreedetError
from .mucalc import Formula, parse_formula, sorted_formulas

AXIOMS = ("Ax1", "Ax2")
NW_RULES = ("Ax1", "Ax2", "R_or", "R_and", "R_mu", "R_nu", "R_box", "Dis")
BT_RULES = NW_RULES + ("Resolve", "Compress")
ARITY = {"Ax1": 0, "Ax2": 0, "R_or": 1, "R_and": 2, "R_mu": 1, "R_nu": 1, "R_box": 1,
         "Dis": 1, "Resolve": 1, "Compress": 1, None: 0}


@dataclass
class Node:
    id: str
    sequent: frozenset
    rule: str | None
    principal: object = None
    children: list = field(default_factory=list)
    discharge: str | None = None     # token on a discharged leaf
    companion_of: str | None = None  # token on a Dis node
    k: int | None = None             # Compress position
    pattern: str | None = None       # Compress pattern s0 or s1


@dataclass
class Derivation:
    nodes: dict  # id -> Node, in preorder
    root: str
    system: str = "nw"

    def __post_init__(self):
        self._parent = None

    def __getitem__(self, nid) -> Node:
        return self.nodes[nid]

    def __len__(self):
        return len(self.nodes)

    @property
    def annotated(self) -> bool:
        return self.system == "bt"

    def parent(self) -> dict:
        if self._parent is None:
            self._parent = {c: n.id for n in self.nodes.values() for c in n.children}
        return self._parent

    def companions(self) -> dict:
        """Map discharged leaf id -> companion id."""
        by_token = {}
        for n in self.nodes.values():
            if n.rule == "Dis":
                if n.companion_of in by_token:
                    raise StructuralError(f"token {n.companion_of!r} used by two Dis nodes",
                                          n.id)
                by_token[n.companion_of] = n.id
        out = {}
        for n in self.nodes.values():
            if n.rule is None:
                if n.discharge not in by_token:
                    raise StructuralError(f"dangling discharge token {n.discharge!r}", n.id)
                out[n.id] = by_token[n.discharge]
        return out

    def ancestors(self, nid) -> list:
        """Proper ancestors of ``nid``, nearest first."""
        par = self.parent()
        out = []
        while nid in par:
            nid = par[nid]
            out.append(nid)
        return out

    def path(self, top, bottom) -> list:
        """Tree path from ``top`` down to ``bottom`` (both included)."""
        out = [bottom]
        par = self.parent()
        while out[-1] != top:
            if out[-1] not in par:
                raise StructuralError(f"{top} is not an ancestor", bottom)
            out.append(par[out[-1]])
        return out[::-1]

    def edges(self) -> dict:
        """Successor lists of the proof graph with back-edges."""
        comp = self.companions()
        out = {nid: list(n.children) for nid, n in self.nodes.items()}
        for leaf, c in comp.items():
            out[leaf] = [c]
        return out

    def check_shape(self):
        """Arity, tree shape and the discharge conditions."""
        if self.root not in self.nodes:
            raise StructuralError("missing root", self.root)
        seen = set()
        stack = [self.root]
        while stack:
            nid = stack.pop()
            if nid in seen:
                raise StructuralError("node reached twice; not a tree", nid)
            seen.add(nid)
            n = self.nodes[nid]
            if n.rule not in ARITY:
                raise StructuralError(f"unknown rule {n.rule!r}", nid)
            if len(n.children) != ARITY[n.rule]:
                raise StructuralError(f"{n.rule} needs {ARITY[n.rule]} children, "
                                      f"has {len(n.children)}", nid)
            for c in n.children:
                if c not in self.nodes:
                    raise StructuralError(f"unknown child {c!r}", nid)
                stack.append(c)
        if seen != set(self.nodes):
            raise StructuralError("unreachable nodes", sorted(set(self.nodes) - seen)[0])
        for leaf, c in self.companions().items():
            anc = self.ancestors(leaf)
            child = self.nodes[c].children[0]
            if c not in anc or child not in anc:
                raise StructuralError("companion and its child must be proper ancestors",
                                      leaf)
            if self.nodes[leaf].sequent != self.nodes[c].sequent:
                raise StructuralError("discharged leaf differs from its companion", leaf)


def insert_discharges(nodes: dict, root: str, targets: dict, system: str) -> Derivation:
    """Put a Dis node above every discharge target and renumber in preorder."""
    parent = {c: nid for nid, n in nodes.items() for c in n.children}
    for tid, tok in targets.items():
        did = f"{tid}d"
        nodes[did] = Node(did, nodes[tid].sequent, "Dis", children=[tid], companion_of=tok)
        if tid in parent:
            p = nodes[parent[tid]]
            p.children = [did if c == tid else c for c in p.children]
        else:
            root = did
    order = []
    stack = [root]
    while stack:
        nid = stack.pop()
        order.append(nid)
        stack.extend(reversed(nodes[nid].children))
    rename = {old: f"n{i}" for i, old in enumerate(order)}
    out = {}
    for old in order:
        n = nodes[old]
        n.id = rename[old]
        n.children = [rename[c] for c in n.children]
        out[n.id] = n
    return Derivation(out, rename[root], system)


# -- JSON ---------------------------------------------------------------------

def _formula_text(f):
    return str(f)


def _item_to_json(item, annotated):
    if not annotated:
        return _formula_text(item)
    f, sigma = item
    return {"formula": _formula_text(f), "annotation": list(sigma)}


def _item_key(item):
    if isinstance(item, Formula):
        return (str(item), ())
    return (str(item[0]), item[1])


def derivation_to_json(d: Derivation) -> str:
    out = []
    for nid, n in d.nodes.items():
        obj = {"id": nid,
               "sequent": [_item_to_json(x, d.annotated) for x in sorted(n.sequent, key=_item_key)],
               "rule": n.rule}
        if n.principal is not None:
            obj["principal"] = _item_to_json(n.principal, d.annotated)
        if n.rule == "Compress":
            obj["k"] = n.k
            obj["pattern"] = n.pattern
        if n.companion_of is not None:
            obj["companion-of"] = n.companion_of
        if n.discharge is not None:
            obj["discharge"] = n.discharge
        obj["children"] = list(n.children)
        out.append(obj)
    doc = {"system": d.system, "root": d.root, "nodes": out}
    return json.dumps(doc, indent=1, ensure_ascii=False) + "\n"


def _bits(s):
    if not isinstance(s, str):
        raise StructuralError(f"annotation entries must be strings, got {s!r}")
    s = "" if s == "ε" else s
    if set(s) - {"0", "1"}:
        raise StructuralError(f"not a binary string: {s!r}")
    return s


def _item_from_json(x, annotated, cache):
    def formula(text):
        if text not in cache:
            cache[text] = parse_formula(text, allow_shadowing=True)
        return cache[text]

    if not annotated:
        if not isinstance(x, str):
            raise StructuralError(f"expected a formula string, got {x!r}")
        return formula(x)
    if not isinstance(x, dict) or "formula" not in x:
        raise StructuralError(f"expected {{formula, annotation}}, got {x!r}")
    return formula(x["formula"]), tuple(_bits(s) for s in x.get("annotation", []))


def derivation_from_json(text: str) -> Derivation:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise StructuralError(f"invalid JSON: {e}") from None
    if not isinstance(doc, dict) or "nodes" not in doc:
        raise StructuralError("expected an object with a 'nodes' list")
    system = doc.get("system", "nw")
    if system not in ("nw", "bt"):
        raise StructuralError(f"unknown system {system!r}")
    annotated = system == "bt"
    cache: dict = {}
    nodes = {}
    for obj in doc["nodes"]:
        try:
            nid = str(obj["id"])
            seq = frozenset(_item_from_json(x, annotated, cache) for x in obj["sequent"])
            principal = obj.get("principal")
            if principal is not None:
                principal = _item_from_json(principal, annotated, cache)
            node = Node(nid, seq, obj.get("rule"), principal,
                        [str(c) for c in obj.get("children", [])],
                        obj.get("discharge"), obj.get("companion-of"),
                        obj.get("k"), obj.get("pattern"))
        except (KeyError, TypeError) as e:
            raise StructuralError(f"malformed node {obj!r}: {e}") from None
        except TreedetError as e:
            raise StructuralError(str(e), obj.get("id")) from None
        if nid in nodes:
            raise StructuralError("duplicate node id", nid)
        nodes[nid] = node
    if not nodes:
        raise StructuralError("empty derivation")
    root = str(doc.get("root", next(iter(nodes))))
    d = Derivation(nodes, root, system)
    d.check_shape()
    return d


# -- rendering ----------------------------------------------------------------

def item_text(item) -> str:
    if isinstance(item, Formula):
        return str(item)
    f, sigma = item
    return f"{f}^({','.join(format_bits(s) for s in sigma)})"


def sequent_text(seq) -> str:
    return ", ".join(item_text(x) for x in sorted(seq, key=_item_key))


def rule_text(n: Node) -> str:
    if n.rule is None:
        return f"[{n.discharge}]"
    if n.rule == "Dis":
        return f"Dis[{n.companion_of}]"
    if n.rule == "Compress":
        return f"Compress_{n.k}[{n.pattern}]"
    return n.rule


def to_dot(d: Derivation, name: str = "proof") -> str:
    lines = [f"digraph {name} {{", "  node [shape=box, fontname=monospace];"]
    for nid, n in d.nodes.items():
        label = f"{rule_text(n)}\\n{sequent_text(n.sequent)}".replace('"', '\\"')
        extra = ""
        if n.rule == "Compress" and n.pattern and n.pattern.endswith("1"):
            extra = ", style=filled, fillcolor=palegreen"
        lines.append(f'  "{nid}" [label="{label}"{extra}];')
    for nid, n in d.nodes.items():
        for c in n.children:
            lines.append(f'  "{nid}" -> "{c}";')
    for leaf, c in d.companions().items():
        lines.append(f'  "{leaf}" -> "{c}" [style=dashed];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def sequent_formulas(seq) -> list:
    return sorted_formulas(seq)
