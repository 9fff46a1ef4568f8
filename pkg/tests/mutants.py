"""Mutation operators on derivations, for checker robustness tests."""

import copy

from treedet.derivation import Derivation, Node


def _preorder(nodes, root):
    order, stack = [], [root]
    while stack:
        nid = stack.pop()
        order.append(nid)
        stack.extend(reversed(nodes[nid].children))
    return {nid: nodes[nid] for nid in order}


def _rebuild(nodes, root, system):
    return Derivation(_preorder(nodes, root), root, system)


def retarget_back_edges(d):
    """Point each discharged leaf at another node: an equal-sequent ancestor
    (given a fresh Dis node) or another existing companion."""
    out = []
    comp = d.companions()
    for leaf, c in comp.items():
        current = d[c].children[0]
        for a in d.ancestors(leaf):
            an = d[a]
            if a == current or an.rule in ("Dis", None) or an.sequent != d[leaf].sequent:
                continue
            nodes = copy.deepcopy(d.nodes)
            root = d.root
            did = f"{a}m"
            nodes[did] = Node(did, an.sequent, "Dis", children=[a], companion_of="xm")
            parent = d.parent().get(a)
            if parent is None:
                root = did
            else:
                p = nodes[parent]
                p.children = [did if x == a else x for x in p.children]
            nodes[leaf].discharge = "xm"
            out.append(("retarget", _rebuild(nodes, root, d.system)))
        for other in comp.values():
            if other != c:
                nodes = copy.deepcopy(d.nodes)
                nodes[leaf].discharge = d[other].companion_of
                out.append(("retarget", _rebuild(nodes, d.root, d.system)))
    return out


def delete_compress(d):
    out = []
    for nid, n in d.nodes.items():
        if n.rule != "Compress":
            continue
        nodes = copy.deepcopy(d.nodes)
        child = n.children[0]
        root = d.root
        parent = d.parent().get(nid)
        if parent is None:
            root = child
        else:
            p = nodes[parent]
            p.children = [child if x == nid else x for x in p.children]
        del nodes[nid]
        out.append(("delete-compress", _rebuild(nodes, root, d.system)))
    return out


def flip_bits(d):
    out = []
    for nid, n in d.nodes.items():
        for item in sorted(n.sequent, key=lambda x: (str(x[0]), x[1])):
            f, sigma = item
            for i, s in enumerate(sigma):
                for j in range(len(s)):
                    t = s[:j] + ("1" if s[j] == "0" else "0") + s[j + 1:]
                    nodes = copy.deepcopy(d.nodes)
                    new = (f, sigma[:i] + (t,) + sigma[i + 1:])
                    nodes[nid].sequent = (n.sequent - {item}) | {new}
                    if nodes[nid].principal == item:
                        nodes[nid].principal = new
                    out.append(("flip", _rebuild(nodes, d.root, d.system)))
    return out


def all_mutants(d):
    muts = retarget_back_edges(d)
    if d.system == "bt":
        muts += delete_compress(d) + flip_bits(d)
    return muts
