"""Acceptance criteria 1-9.

Run with pytest (one PASS/FAIL line per criterion is printed in the terminal
summary) or directly: ``python tests/test_acceptance.py``.
"""

import functools
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from corpus import (corpus_derivation, fig1, nw_corpus, random_condition_graph,
                    random_formula, random_nba, random_parity, rng_for)
from mutants import all_mutants
from treedet.automata import Lasso, accepts_lasso, compare_on_lassos
from treedet.btproof import (check_bt, check_bt_brute, erase, prove, translate_nw_to_bt,
                             validate_bt)
from treedet.cycleengine import all_scs_good, brute_scs_good
from treedet.determinize import (GREEN, RED, WHITE, det_buchi, det_buchi_step, det_parity,
                                 det_parity_step, parity_to_buchi, random_chooser)
from treedet.errors import StructuralError, TreedetError
from treedet.nwproof import (branch_word, build_nw, check_nw, check_nw_brute,
                             enumerate_branches, nu_trail_oracle, tracking_automaton,
                             validate_nw)

N_AUTOMATA = 300


@functools.lru_cache(maxsize=None)
def buchi_runs():
    rng = rng_for("criterion-2")
    out = []
    for _ in range(N_AUTOMATA):
        src = random_nba(rng)
        det, states = det_buchi(src)
        out.append((src, det, states))
    return out


@functools.lru_cache(maxsize=None)
def parity_runs():
    rng = rng_for("criterion-3")
    out = []
    for _ in range(N_AUTOMATA):
        src = random_parity(rng)
        det, states = det_parity(src)
        out.append((src, det, states))
    return out


def criterion_1():
    det, states = det_buchi(fig1())
    ms = list(states.values())
    problems = []
    if len(ms) != 4:
        problems.append(f"{len(ms)} macrostates")
    else:
        _, m1, m2, m3 = ms
        if (m1.f, m1.c) != ({"q1": ""}, {"": GREEN}):
            problems.append("m1")
        leaves = {"q2": "0", "q1": "1"}
        if (m2.f, m2.c) != (leaves, {"": WHITE, "0": WHITE, "1": WHITE}):
            problems.append("m2")
        if (m3.f, m3.c) != (leaves, {"": GREEN, "0": RED, "1": RED}):
            problems.append("m3")
        if det.delta("m3", "a") != {"m3"}:
            problems.append("m3 is not a self-loop")
    if not accepts_lasso(det, Lasso((), ("a",))):
        problems.append("a^ω rejected")
    return not problems, "; ".join(problems) or "4 macrostates as pictured, a^ω accepted"


def criterion_2():
    tested = 0
    for i, (src, det, _) in enumerate(buchi_runs()):
        res = compare_on_lassos(src, det, 3, 4)
        tested += res.tested
        if not res.agree:
            return False, f"automaton {i} disagrees on {res.counterexample}"
    return True, f"{N_AUTOMATA} NBAs, {tested} lasso checks, 100% agreement"


def criterion_3():
    tested = 0
    for i, (src, det, _) in enumerate(parity_runs()):
        for other, what in ((det, "A^D"), (parity_to_buchi(src), "parity_to_buchi")):
            res = compare_on_lassos(src, other, 3, 4)
            tested += res.tested
            if not res.agree:
                return False, f"automaton {i} vs {what} disagrees on {res.counterexample}"
    return True, f"{N_AUTOMATA} parity automata, {tested} lasso checks, 100% agreement"


def criterion_4(cases=120, orders=10):
    rng = rng_for("criterion-4")
    pool = []
    for src, _, states in buchi_runs()[:60]:
        pool += [(det_buchi_step, S, y, src) for S in states.values() for y in src.alphabet]
    for src, _, states in parity_runs()[:60]:
        pool += [(det_parity_step, S, y, src) for S in states.values() for y in src.alphabet]
    picked = rng.sample(pool, cases)
    for i, (step, S, y, src) in enumerate(picked):
        want = step(S, y, src)
        for k in range(orders):
            got = step(S, y, src, choose=random_chooser(f"{i}:{k}"))
            if got != want:
                return False, f"case {i} differs under order {k}"
    return True, f"{cases} cases x {orders} witness orders, 0 differences"


def criterion_5():
    violations = []
    checked = 0
    _, fig_states = det_buchi(fig1())
    buchi = [(fig1(), None, fig_states)] + list(buchi_runs())
    for label, runs, parity in (("buchi", buchi, False), ("parity", parity_runs(), True)):
        for i, (src, det, states) in enumerate(runs):
            n = len(src.states)
            if len(states) > 6 ** (2 * n - 1) * (n + 1) ** (n + 1):
                violations.append(f"{label} {i}: {len(states)} states")
            if det is not None:
                pairs = len(det.acceptance.pairs)
                bound = 2 ** (n + 1)
                if parity:
                    ms = [S.m for S in states.values() if S.m is not None]
                    bound *= (max(ms) // 2 + 1) if ms else 1
                if pairs > bound:
                    violations.append(f"{label} {i}: {pairs} Rabin pairs")
            for S in states.values():
                checked += 1
                if parity:
                    colourings = [dict(c) for c in S.colourings]
                    strings = [s for sigma in S.f.values() for s in sigma]
                else:
                    colourings = [S.c]
                    strings = list(S.f.values())
                if any(c.get("") == RED for c in colourings):
                    violations.append(f"{label} {i}: ε red")
                if any(len(s) > n for s in strings):
                    violations.append(f"{label} {i}: annotation longer than n")
    detail = f"{checked} macrostates, {len(violations)} violations"
    return not violations, detail + (f" (first: {violations[0]})" if violations else "")


def criterion_6(count=500):
    rng = rng_for("criterion-6")
    for i in range(count):
        g = random_condition_graph(rng, max_nodes=12, max_pairs=4)
        if bool(all_scs_good(g)) != bool(brute_scs_good(g)):
            return False, f"graph {i} disagrees"
    return True, f"{count} graphs, 0 disagreements"


def criterion_7():
    derivations = branches = 0
    kinds = set()
    for text, d, expected in nw_corpus():
        derivations += 1
        kinds.add(expected)
        aut = tracking_automaton(d[d.root].sequent)
        for b in enumerate_branches(d):
            branches += 1
            if nu_trail_oracle(d, b) != accepts_lasso(aut, branch_word(d, b)):
                return False, f"{text}: branch {b} disagrees"
    ok = derivations >= 10 and kinds == {True, False}
    return ok, f"{derivations} derivations, {branches} branches, 100% agreement"


def _mutant_pool():
    """Corpus NW proofs, their translations, prover proofs and random-formula proofs."""
    pool = []
    for text, nw, expected in nw_corpus():
        if expected:
            pool += [(text, nw), (text, translate_nw_to_bt(nw))]
    for text in ["nu x. [] [] x", "nu x. [] x & [] x", "nu x. nu y. [](x & y)"]:
        r = prove(text)
        if r:
            pool.append((text, r.proof))
    rng = rng_for("criterion-8")
    for _ in range(150):
        f = random_formula(rng, 4)
        r = prove(f, cap=3000)
        if r:
            pool += [(str(f), r.proof), (str(f), erase(r.proof))]
        try:
            nw = build_nw([f])
        except TreedetError:
            nw = None
        if nw is not None and check_nw(nw):
            pool += [(str(f), nw)]
    return pool


def _verdict(d, brute=False):
    if d.system == "bt":
        return bool(check_bt_brute(d) if brute else check_bt(d))
    return bool(check_nw_brute(d) if brute else check_nw(d))


def criterion_8():
    for text, nw, expected in nw_corpus():
        if not expected:
            continue
        bt = translate_nw_to_bt(nw)
        if not check_bt(bt) or not check_nw(erase(bt)):
            return False, f"round trip fails on {text}"

    total = valid = rejected = unsound = unsound_rejected = disagree = 0
    for text, d in _mutant_pool():
        for kind, m in all_mutants(d):
            total += 1
            try:
                (validate_bt if m.system == "bt" else validate_nw)(m)
            except StructuralError:
                continue
            valid += 1
            got = _verdict(m)
            rejected += not got
            # the brute-force route decides whether the mutant is still a proof
            truth = _verdict(m, brute=True) if m.system == "nw" or len(m) <= 15 else False
            disagree += got != truth
            if not truth:
                unsound += 1
                unsound_rejected += not got

    nu_nw = corpus_derivation("nu x. [] x", 0)
    nu_muts = all_mutants(translate_nw_to_bt(nu_nw)) + all_mutants(nu_nw)
    nu_rejected = 0
    for kind, m in nu_muts:
        try:
            nu_rejected += not _verdict(m)
        except StructuralError:
            nu_rejected += 1

    rate = unsound_rejected / unsound if unsound else 1.0
    literal = rejected / valid if valid else 1.0
    ok = disagree == 0 and rate >= 0.95 and nu_rejected == len(nu_muts)
    detail = (f"{total} mutants, {valid} structurally valid; rejected {rejected}/{valid} "
              f"({literal:.0%}), of which {unsound} are non-proofs by brute force, "
              f"{unsound_rejected} rejected ({rate:.0%}); checker/oracle disagreements "
              f"{disagree}; nu x.[]x witness breakers rejected {nu_rejected}/{len(nu_muts)}")
    return ok, detail


def criterion_9():
    slow = []
    problems = []
    for text, want in [("true", True), ("p | ~p", True), ("[] true", True),
                       ("nu x. [] x", True), ("nu x. [][] x", True),
                       ("p", False), ("<> true", False), ("mu x. [] x", False),
                       ("mu x. <> x", False)]:
        t = time.perf_counter()
        r = prove(text)
        dt = time.perf_counter() - t
        if dt >= 10:
            slow.append(text)
        if want and not (r and check_bt(r.proof)):
            problems.append(f"no proof of {text}")
        if not want and r:
            problems.append(f"proof of {text}")
    problems += [f"{t} took >= 10 s" for t in slow]
    return not problems, "; ".join(problems) or "5 proofs found and checked, 4 none-within-budget"


CRITERIA = [
    (1, "Figure 1 reproduction", criterion_1, 1.0),
    (2, "Büchi determinization equivalence", criterion_2, 300.0),
    (3, "Parity determinization equivalence", criterion_3, None),
    (4, "Witness-order independence", criterion_4, None),
    (5, "Structural macrostate invariants", criterion_5, None),
    (6, "Cycle-engine oracle equivalence", criterion_6, 120.0),
    (7, "Tracking automaton vs trail oracle", criterion_7, None),
    (8, "NW to BT round trip and mutation suite", criterion_8, None),
    (9, "Prover end-to-end", criterion_9, None),
]


def run_criterion(num):
    _, name, func, limit = CRITERIA[num - 1]
    t = time.perf_counter()
    ok, detail = func()
    dt = time.perf_counter() - t
    if limit is not None and dt >= limit:
        ok = False
        detail += f"; took {dt:.2f} s, limit {limit:.0f} s"
    return ok, f"criterion {num} ({name}): {'PASS' if ok else 'FAIL'} in {dt:.2f} s; {detail}"


def _check(num, acceptance_report):
    ok, line = run_criterion(num)
    acceptance_report(line)
    assert ok, line


def test_criterion_1(acceptance_report):
    _check(1, acceptance_report)


def test_criterion_2(acceptance_report):
    _check(2, acceptance_report)


def test_criterion_3(acceptance_report):
    _check(3, acceptance_report)


def test_criterion_4(acceptance_report):
    _check(4, acceptance_report)


def test_criterion_5(acceptance_report):
    _check(5, acceptance_report)


def test_criterion_6(acceptance_report):
    _check(6, acceptance_report)


def test_criterion_7(acceptance_report):
    _check(7, acceptance_report)


def test_criterion_8(acceptance_report):
    _check(8, acceptance_report)


def test_criterion_9(acceptance_report):
    _check(9, acceptance_report)


if __name__ == "__main__":
    results = [run_criterion(n) for n, *_ in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
