"""Acceptance run: one test and one pass/fail line per criterion.

The bundled corpus is decided once through the command line driver; the
later criteria re-derive trees, models and branches from the same cases.
"""

import json
import random
import subprocess
import sys
import time
from collections import Counter

import pytest

import conftest
from mlogic import checks
from mlogic.cli import CORPUS_NODE_BUDGET, main
from mlogic.corpus import bundled_corpus_path, load_corpus, parse_universe
from mlogic.deduction import (
    DEFAULT_DEPTH_BUDGET, GuidanceFailed, ProofTree, expand, guided_branch, root_label,
    verify_soundness, verify_subformula,
)
from mlogic.formula import instantiate
from mlogic.hfset import extensional_witness, is_transitive, mostowski
from mlogic.parser import parse, render
from mlogic.semantics import Evaluator, SeedConfig, find_submodel, truth_in_sequent
from mlogic.wfcheck import end_extension_order, wf_fast

RUNTIME_LIMIT = 60.0
GUIDED_DEPTH = 200


def record(n, title, ok, detail):
    line = f"criterion {n} ({title}): {'PASS' if ok else 'FAIL'}; {detail}"
    conftest.ACCEPTANCE_LINES[n] = line
    print(line)
    return ok


@pytest.fixture(scope="module")
def cases():
    out = []
    for c in load_corpus(bundled_corpus_path()):
        out.append((c, c.parsed(), SeedConfig.from_naturals(c.k, c.r), parse_universe(c.universe)))
    return out


@pytest.fixture(scope="module")
def corpus_run(tmp_path_factory, cases):
    out = tmp_path_factory.mktemp("corpus_a")
    started = time.perf_counter()
    code = main(["--mode", "corpus", "--no-timing", "--out", str(out)])
    seconds = time.perf_counter() - started
    report = json.loads((out / "report.json").read_text())
    return code, out, seconds, report


@pytest.fixture(scope="module")
def finite_trees(cases, corpus_run):
    """Every corpus case whose search tree is finite within the corpus budget."""
    trees = []
    for c, psi, seeds, M in cases:
        outcome = expand(psi, seeds, M, CORPUS_NODE_BUDGET, DEFAULT_DEPTH_BUDGET)
        if isinstance(outcome, ProofTree):
            trees.append((c, psi, seeds, M, outcome))
    return trees


@pytest.fixture(scope="module")
def model_cases(cases):
    found = []
    for c, psi, seeds, M in cases:
        M_f = find_submodel(M, seeds, psi)
        if M_f is not None:
            found.append((c, psi, seeds, M, M_f))
    return found


def test_criterion_1_dichotomy_agreement(corpus_run, cases):
    code, _, seconds, report = corpus_run
    formulas = {c.formula for c, *_ in cases}
    verdicts = Counter(r["verdict"] for r in report)
    agree = sum(1 for r in report if r["agreement"] is True)
    bad = [r["case"] for r in report if r["agreement"] is not True]
    by_formula = Counter(name.split("@")[0] for name in bad)
    ok = (len(formulas) >= 30 and agree == len(report) and verdicts["dichotomy_violation"] == 0
          and code == 0 and seconds < RUNTIME_LIMIT)
    detail = (f"{len(report)} cases over {len(formulas)} formulas; agreement {agree}/{len(report)}; "
              f"{verdicts['dichotomy_violation']} dichotomy violations; exit {code}; {seconds:.1f} s")
    if by_formula:
        detail += "; disagreeing: " + ", ".join(f"{k} x{v}" for k, v in sorted(by_formula.items()))
    assert record(1, "dichotomy agreement", ok, detail)


def test_criterion_2_soundness(finite_trees):
    failures = []
    for c, psi, seeds, M, tree in finite_trees:
        bad = verify_soundness(tree, M)
        if bad is not None:
            failures.append(f"{c.name}: {bad.reason}")
        if truth_in_sequent(M, tree.root.label) not in (0, 1):
            failures.append(f"{c.name}: root sequent has no true formula")
    detail = f"{len(finite_trees)} finite trees checked; {len(failures)} failures"
    assert record(2, "soundness", not failures, detail), failures[:5]


def test_criterion_3_countermodels(model_cases):
    failures = []
    guidance = 0
    for c, psi, seeds, M, M_f in model_cases:
        if extensional_witness(M_f) is not None:
            failures.append(f"{c.name}: not extensional")
        if not Evaluator(M_f)(instantiate(psi, seeds.r)):
            failures.append(f"{c.name}: psi(r) fails")
        mapping, image = mostowski(M_f)
        if not is_transitive(image.carrier) or mapping[seeds.r] is not seeds.r:
            failures.append(f"{c.name}: collapse")
        try:
            branch = guided_branch(psi, seeds, M_f, GUIDED_DEPTH)
        except GuidanceFailed as err:
            guidance += 1
            failures.append(f"{c.name}: {err}")
            continue
        if branch.certificate != [None] * (GUIDED_DEPTH + 1):
            failures.append(f"{c.name}: certificate")
    detail = (f"{len(model_cases)} models checked; guided depth {GUIDED_DEPTH}; "
              f"{guidance} guidance failures; {len(failures)} failures")
    assert record(3, "countermodel validity", not failures, detail), failures[:5]


def test_criterion_4_compatibility(cases):
    formulas = list({c.formula: (psi, seeds) for c, psi, seeds, _ in cases}.values())
    failures = checks.suite_compatibility(random.Random(20261016), formulas, 200, depth=8)
    detail = f"200 nested pairs S <= M <= N <= V4 to depth 8; {len(failures)} mismatches"
    assert record(4, "compatibility", not failures, detail), failures[:5]


def test_criterion_5_subformula_property(finite_trees, model_cases):
    failures = []
    for c, psi, seeds, M, tree in finite_trees:
        bad = verify_subformula(tree, root_label(psi, seeds))
        if bad is not None:
            failures.append(f"{c.name}: {bad.to_json()}")
    branches = 0
    for c, psi, seeds, M, M_f in model_cases:
        try:
            branch = guided_branch(psi, seeds, M_f, GUIDED_DEPTH)
        except GuidanceFailed:
            continue
        branches += 1
        bad = verify_subformula(branch, root_label(psi, seeds))
        if bad is not None:
            failures.append(f"{c.name} branch: {bad.to_json()}")
    detail = f"{len(finite_trees)} trees and {branches} branches; {len(failures)} failures"
    assert record(5, "subformula property", not failures, detail), failures[:5]


def test_criterion_6_well_foundedness(finite_trees):
    wf = checks.suite_wf(random.Random(6), 1000, max_domain=12)
    lifted = checks.suite_product(random.Random(7), 200)
    ends = [c.name for c, *_, tree in finite_trees if wf_fast(end_extension_order(tree.paths())) is not True]
    ok = not wf and not lifted and not ends
    detail = (f"wf_naive vs wf_fast on 1000 relations: {len(wf)} disagreements; product lift on 200 cases: "
              f"{len(lifted)} disagreements; end-extension order of {len(finite_trees)} trees: "
              f"{len(ends)} not well-founded")
    assert record(6, "well-foundedness checkers", ok, detail)


def test_criterion_7_determinism(corpus_run, tmp_path):
    _, first, _, _ = corpus_run
    second = tmp_path / "corpus_b"
    proc = subprocess.run([sys.executable, "-m", "mlogic", "--mode", "corpus", "--no-timing",
                           "--out", str(second)], capture_output=True, text=True)
    files = sorted(p.relative_to(first) for p in first.rglob("*") if p.is_file())
    other = sorted(p.relative_to(second) for p in second.rglob("*") if p.is_file())
    differing = [str(f) for f in files if f not in other or (first / f).read_bytes() != (second / f).read_bytes()]
    ok = files == other and not differing
    detail = (f"second run in a fresh process (exit {proc.returncode}); {len(files)} artifacts compared; "
              f"{len(differing)} differ")
    assert record(7, "determinism", ok, detail), differing[:5]


def test_criterion_8_parser(cases):
    failures = checks.suite_parser(random.Random(8), 1000, depth=6)
    corpus_bad = []
    for text in sorted({c.formula for c, *_ in cases}):
        phi = parse(text)
        if parse(render(phi)) is not phi or render(parse(render(phi))) != render(phi):
            corpus_bad.append(text)
    ok = not failures and not corpus_bad
    detail = (f"1000 random formulas of depth <= 6: {len(failures)} failures; "
              f"{len({c.formula for c, *_ in cases})} corpus formulas: {len(corpus_bad)} failures")
    assert record(8, "parser round trip", ok, detail)
