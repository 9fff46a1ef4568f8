"""Command line interface.

Exit codes: 0 accepted / valid / agree, 1 rejected / disagree / no proof
found, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import sys

from . import automata, btproof, derivation, determinize, nwproof
from .automata import Buchi, Lasso, Parity
from .errors import TreedetError
from .mucalc import closure, parse_formula, parse_sequent, sorted_formulas


def _read(path):
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _write(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _letters(text):
    text = text.strip()
    if not text:
        return ()
    if "," in text or " " in text:
        return tuple(x for x in text.replace(",", " ").split() if x)
    return tuple(text)


def _lasso(args) -> Lasso:
    loop = _letters(args.loop)
    if not loop:
        raise TreedetError("the loop of a lasso must be nonempty")
    return Lasso(_letters(args.stem), loop)


def _load_aut(path):
    return automata.parse_automaton(_read(path))


# -- formula ---------------------------------------------------------------------

def cmd_formula_parse(args):
    print(parse_formula(args.formula))
    return 0


def cmd_formula_closure(args):
    table = closure([parse_formula(args.formula)])
    for f in sorted_formulas(table.members):
        tag = f"  Ω={table.omega[f]}" if f in table.omega else ""
        print(f"{f}{tag}")
    print(f"m = {'none' if table.m is None else table.m}")
    return 0


# -- automata --------------------------------------------------------------------

def cmd_aut_determinize(args):
    src = _load_aut(args.input)
    if isinstance(src.acceptance, Buchi):
        aut, states = determinize.det_buchi(src)
    elif isinstance(src.acceptance, Parity):
        aut, states = determinize.det_parity(src)
    else:
        raise TreedetError("determinize expects a Büchi or parity automaton")
    _write(args.out, automata.format_automaton(aut))
    if args.dict:
        _write(args.dict, determinize.render_dictionary(states))
    if args.emit_dot:
        _write(args.emit_dot, automata.to_dot(aut))
    print(f"{len(aut.states)} states", file=sys.stderr)
    return 0


def cmd_aut_run(args):
    aut = _load_aut(args.input)
    run = automata.run_prefix(aut, _lasso(args), args.steps)
    print(" ".join(str(q) for q in run))
    return 0


def cmd_aut_accepts(args):
    ok = automata.accepts_lasso(_load_aut(args.input), _lasso(args))
    print("accepted" if ok else "rejected")
    return 0 if ok else 1


def cmd_aut_compare(args):
    a, b = _load_aut(args.a), _load_aut(args.b)
    sampling = (args.sample, args.seed) if args.sample else None
    res = automata.compare_on_lassos(a, b, args.max_stem, args.max_loop, sampling, args.jobs)
    if res.agree:
        print(f"agree on {res.tested} lassos")
        return 0
    w = res.counterexample
    print(f"disagree on stem={' '.join(map(str, w.stem))!r} loop={' '.join(map(str, w.loop))!r}: "
          f"{res.verdicts[0]} vs {res.verdicts[1]}")
    return 1


# -- proofs ----------------------------------------------------------------------

def _emit_proof_dot(args, d):
    if getattr(args, "emit_dot", None):
        _write(args.emit_dot, derivation.to_dot(d))


def cmd_proof_check(args):
    d = derivation.derivation_from_json(_read(args.input))
    if d.system != args.system:
        raise TreedetError(f"file holds a {d.system} derivation, not {args.system}")
    if args.system == "nw":
        verdict = nwproof.check_nw(d)
        witness = verdict.witness
    else:
        verdict = btproof.check_bt(d, strict=not args.nonstrict)
        witness = verdict.witness
    _emit_proof_dot(args, d)
    if verdict:
        print("proof")
        return 0
    print(f"not a proof; bad strongly connected set: {', '.join(sorted(witness))}")
    return 1


def cmd_proof_translate(args):
    nw = derivation.derivation_from_json(_read(args.input))
    if not nwproof.check_nw(nw):
        print("input is not an NW proof", file=sys.stderr)
        return 1
    d = btproof.translate_nw_to_bt(nw, cap=args.cap)
    _write(args.out, derivation.derivation_to_json(d))
    _emit_proof_dot(args, d)
    return 0


def cmd_prove(args):
    if args.formula is not None:
        goal = parse_formula(args.formula)
    else:
        goal = parse_sequent(_read(args.input).splitlines())
    res = btproof.prove(goal, depth=args.depth, cap=args.cap)
    if res.proof is None:
        print(f"none within budget ({res.reason}, {res.nodes_explored} search nodes)")
        return 1
    _write(args.out, derivation.derivation_to_json(res.proof))
    _emit_proof_dot(args, res.proof)
    print(f"proof with {len(res.proof)} nodes", file=sys.stderr)
    return 0


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="treedet",
                                description="Tree determinization and annotated cyclic proofs.")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("formula", help="formula utilities").add_subparsers(dest="action",
                                                                            required=True)
    fp = f.add_parser("parse", help="print the canonical form")
    fp.add_argument("formula")
    fp.set_defaults(func=cmd_formula_parse)
    fc = f.add_parser("closure", help="list the closure with priorities")
    fc.add_argument("formula")
    fc.set_defaults(func=cmd_formula_closure)

    a = sub.add_parser("aut", help="automaton utilities").add_subparsers(dest="action",
                                                                         required=True)
    ad = a.add_parser("determinize", help="Büchi or parity to deterministic Rabin")
    ad.add_argument("--in", dest="input", required=True)
    ad.add_argument("--out")
    ad.add_argument("--dict", help="write the macrostate dictionary here")
    ad.add_argument("--emit-dot", "--dot", dest="emit_dot")
    ad.set_defaults(func=cmd_aut_determinize)
    for name, func, helptext in (("run", cmd_aut_run, "print the run prefix of a deterministic automaton"),
                                 ("accepts", cmd_aut_accepts, "test membership of a lasso")):
        sp = a.add_parser(name, help=helptext)
        sp.add_argument("--in", dest="input", required=True)
        sp.add_argument("--stem", default="", help="letters, e.g. 'ab' or 'a,b'")
        sp.add_argument("--loop", required=True)
        if name == "run":
            sp.add_argument("--steps", type=int, default=10)
        sp.set_defaults(func=func)
    ac = a.add_parser("compare", help="compare two automata on bounded lassos")
    ac.add_argument("a")
    ac.add_argument("b")
    ac.add_argument("--max-stem", type=int, default=3)
    ac.add_argument("--max-loop", type=int, default=4)
    ac.add_argument("--sample", type=int, default=0, help="check a random sample of this size")
    ac.add_argument("--seed", type=int, default=0)
    ac.add_argument("--jobs", type=int, default=1)
    ac.set_defaults(func=cmd_aut_compare)

    pr = sub.add_parser("proof", help="proof checking and translation").add_subparsers(
        dest="action", required=True)
    pc = pr.add_parser("check", help="check an NW or BT proof")
    pc.add_argument("--system", choices=("nw", "bt"), default="nw")
    pc.add_argument("--in", dest="input", required=True)
    pc.add_argument("--nonstrict", action="store_true",
                    help="treat Compress_k[s] itself as breaking (k, s)")
    pc.add_argument("--emit-dot")
    pc.set_defaults(func=cmd_proof_check)
    pt = pr.add_parser("translate", help="translate an NW proof into BT")
    pt.add_argument("--in", dest="input", required=True)
    pt.add_argument("--out")
    pt.add_argument("--cap", type=int, default=btproof.DEFAULT_CAP)
    pt.add_argument("--emit-dot")
    pt.set_defaults(func=cmd_proof_translate)

    pv = sub.add_parser("prove", help="search for a BT proof")
    src = pv.add_mutually_exclusive_group(required=True)
    src.add_argument("--formula")
    src.add_argument("--in", dest="input", help="sequent file, one formula per line")
    pv.add_argument("--depth", type=int)
    pv.add_argument("--cap", type=int, default=btproof.DEFAULT_CAP)
    pv.add_argument("--out")
    pv.add_argument("--emit-dot")
    pv.set_defaults(func=cmd_prove)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    try:
        return args.func(args)
    except (TreedetError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
