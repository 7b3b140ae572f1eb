import json
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mlogic.checks import compatibility_pair, mutate_label, random_subset, tree_checks
from mlogic.deduction import (
    LEAF, BudgetReport, DichotomyViolation, GuidedBranch, Inconclusive, Model, ProofTree, Refuted,
    SearchNode, TreeNode, _step, decide, expand, export_verdict, extract_model, fairness_audit,
    fairness_list, guided_branch, label_of, path_key, root_label, step, verify_soundness,
    verify_subformula,
)
from mlogic.formula import (
    And, Eq, Exists, ExistsIn, Forall, ForallIn, Mem, NotEq, Or, extensionality, negate,
)
from mlogic.hfset import EMPTY, Structure, nat, v_stage
from mlogic.parser import parse
from mlogic.semantics import SeedConfig, find_submodel
from mlogic.wfcheck import end_extension_order, wf_fast

ONE = nat(1)
S2 = SeedConfig.from_naturals(2, [])
GAMMA = NotEq(ONE, ONE)


def test_root_label():
    lab = root_label(parse("x = x"), S2)
    assert lab == (NotEq(EMPTY, EMPTY), negate(extensionality()))
    assert len(root_label(parse("E x. r in x"), SeedConfig.from_naturals(3, [1]))) == 2


def test_fairness_list():
    assert fairness_list((), S2) == [EMPTY, EMPTY, ONE]
    a = nat(3)
    assert fairness_list((a,), S2) == [EMPTY, a, EMPTY, ONE]
    assert fairness_list((a, a, a), S2) == [EMPTY, a, EMPTY, a, ONE, a]


class TestRules:
    M = v_stage(2)

    def run(self, label, sigma=()):
        return step(SearchNode(sigma, label), S2, self.M)

    def test_true_literal_is_a_leaf(self):
        assert self.run((Eq(EMPTY, EMPTY), GAMMA)) is LEAF

    def test_false_literal_rotates(self):
        lit = Mem(EMPTY, EMPTY)
        assert self.run((lit, GAMMA)) == [(EMPTY, (GAMMA, lit))]

    def test_conjunction_branches(self):
        p, q = Mem(EMPTY, EMPTY), NotEq(EMPTY, EMPTY)
        phi = And(p, q)
        assert self.run((phi, GAMMA)) == [(EMPTY, (GAMMA, phi, p)), (ONE, (GAMMA, phi, q))]

    def test_disjunction_keeps_both(self):
        p, q = Mem(EMPTY, EMPTY), NotEq(EMPTY, EMPTY)
        phi = Or(p, q)
        assert self.run((phi, GAMMA)) == [(EMPTY, (GAMMA, phi, p, q))]

    def test_universal_has_one_child_per_element(self):
        phi = Forall("x", Mem("x", EMPTY))
        res = self.run((phi, GAMMA))
        assert [t for t, _ in res] == [EMPTY, ONE]
        assert res[1][1] == (GAMMA, phi, Mem(ONE, EMPTY))

    def test_bounded_universal_with_empty_domain_has_no_children(self):
        phi = ForallIn("x", EMPTY, Mem("x", EMPTY))
        assert self.run((phi, GAMMA)) == []
        bounded = ForallIn("x", ONE, Mem("x", EMPTY))
        assert [t for t, _ in self.run((bounded, GAMMA))] == [EMPTY]

    def test_existential_takes_first_new_fairness_entry(self):
        phi = Exists("x", Mem("x", EMPTY))
        assert self.run((phi, GAMMA)) == [(EMPTY, (GAMMA, phi, Mem(EMPTY, EMPTY)))]
        # r = 0 is used, so the next distinct entry is 1
        res = self.run((phi, GAMMA, Mem(EMPTY, EMPTY)))
        assert res == [(EMPTY, (GAMMA, Mem(EMPTY, EMPTY), phi, Mem(ONE, EMPTY)))]
        # nothing new left: the formula only rotates
        res = self.run((phi, Mem(EMPTY, EMPTY), Mem(ONE, EMPTY)))
        assert res == [(EMPTY, (Mem(EMPTY, EMPTY), Mem(ONE, EMPTY), phi))]

    def test_bounded_existential_filters_the_fairness_list(self):
        phi = ExistsIn("x", ONE, Eq("x", ONE))
        assert self.run((phi, GAMMA)) == [(EMPTY, (GAMMA, phi, Eq(EMPTY, ONE)))]
        res = self.run((phi, GAMMA, Eq(EMPTY, ONE)))
        assert res == [(EMPTY, (GAMMA, Eq(EMPTY, ONE), phi))]


def test_trivial_trees():
    tree = expand(parse("r != r"), S2, v_stage(3))
    assert isinstance(tree, ProofTree) and len(tree) == 1 and tree.root.leaf
    assert verify_soundness(tree, v_stage(3)) is None
    tree = expand(parse("E x. x != x"), S2, v_stage(3))
    assert isinstance(tree, ProofTree)
    assert tree_checks(tree, v_stage(3), root_label(parse("E x. x != x"), S2)) == []


def reference_count(label, sigma, carrier, limit):
    """Depth-first node count by direct recursion."""
    res = _step(label, sigma, S2, carrier)
    if res is LEAF:
        return 1
    total = 1
    for tag, child in res:
        total += reference_count(child, sigma + (tag,), carrier, limit)
        if total > limit:
            return total
    return total


@pytest.mark.parametrize("text, k", [
    ("E x. x != x", 2), ("E x. x != x", 3), ("A x. E y. x in y", 2), ("E x. x in x", 3),
    ("E x. x != x and r = r", 4),
])
def test_bfs_tree_matches_recursive_count_and_relabelling(text, k):
    psi, M = parse(text), v_stage(k)
    tree = expand(psi, S2, M)
    assert isinstance(tree, ProofTree)
    assert len(tree) == reference_count(root_label(psi, S2), (), M.carrier, 10**6)
    for node in tree.nodes[:: max(1, len(tree) // 200)]:
        assert label_of(node.sigma, psi, S2, M) == node.label
    assert wf_fast(end_extension_order(tree.paths())) is True
    lengths = [len(n.sigma) for n in tree.nodes]
    assert lengths == sorted(lengths)


def test_budget_report():
    out = expand(parse("x = x"), S2, v_stage(3), budget=500)
    assert isinstance(out, BudgetReport) and out.nodes == 500 and out.reason == "nodes"
    out = expand(parse("x = x"), S2, v_stage(3), depth_budget=5)
    assert isinstance(out, BudgetReport) and out.frontier_depth == 5 and out.reason == "depth"


def test_guided_branch():
    psi = parse("E x. r in x")
    M_f = find_submodel(v_stage(3), S2, psi)
    b0 = guided_branch(psi, S2, M_f, 0)
    assert b0.path == () and b0.certificate == [None]
    b = guided_branch(psi, S2, M_f, 50)
    assert isinstance(b, GuidedBranch) and b.certificate == [None] * 51
    assert extract_model(b.path, S2).issubset(M_f)
    assert verify_subformula(b, root_label(psi, S2)) is None
    assert fairness_audit(psi, S2, M_f, 40) == []


def test_extract_model():
    assert extract_model((), S2).carrier == S2.seed_set
    a = nat(3)
    assert extract_model((a, a), S2) == Structure.of([a, EMPTY, ONE])


def test_soundness_negative_control():
    psi = parse("E x. x != x")
    M = v_stage(2)
    tree = expand(psi, S2, M)
    nodes = [TreeNode(n.sigma, n.label, n.children, n.leaf) for n in tree.nodes]
    victim = nodes[1]
    victim.label = (NotEq(EMPTY, EMPTY), Mem(EMPTY, EMPTY))
    bad = verify_soundness(ProofTree(nodes, complete=True), M)
    assert bad is not None and bad.sigma == victim.sigma


def test_subformula_negative_control():
    psi = parse("E x. x != x")
    tree = expand(psi, S2, v_stage(3))
    bad = verify_subformula(mutate_label(tree), root_label(psi, S2))
    assert bad is not None and bad.sigma == tree.nodes[-1].sigma
    assert verify_subformula(tree, root_label(psi, S2)) is None


def test_decide_examples():
    v = decide(parse("E x. x != x"), S2, v_stage(3))
    assert isinstance(v, Refuted)
    v = decide(parse("r = r"), S2, v_stage(3), budget=2000)
    assert isinstance(v, Model)
    assert v.model.carrier == S2.seed_set
    assert all(v.collapse[a] is a for a in v.model.carrier)
    v = decide(extensionality(), S2, v_stage(3), budget=2000)
    assert isinstance(v, Model) and v.model.carrier == S2.seed_set


def test_decide_reports_disagreement_and_inconclusive():
    psi = parse("A x. E y. x in y")
    with pytest.raises(DichotomyViolation) as info:
        decide(psi, S2, v_stage(3), budget=300)
    assert info.value.oracle is None and isinstance(info.value.outcome, BudgetReport)
    v = decide(psi, S2, v_stage(3), budget=300, use_oracle=False)
    assert isinstance(v, Inconclusive)


def test_export_is_deterministic_json():
    psi_text = "E x. x != x and r = r"
    a = export_verdict(decide(parse(psi_text), S2, v_stage(3)), psi_text, S2, v_stage(3))
    b = export_verdict(decide(parse(psi_text), S2, v_stage(3)), psi_text, S2, v_stage(3))
    assert a == b
    doc = json.loads(a)
    assert doc["verdict"] == "refuted" and doc["tree_nodes"] == len(doc["tree"])
    assert path_key((EMPTY, ONE, nat(2))) == "<0,1,2>"


@given(st.integers(0, 2**32 - 1), st.sampled_from([
    "E x. r in x", "A x. E y. x in y", "E x. x != x", "A x. A y. (A z. (z in x <-> z in y)) -> x = y",
    "E z. 0 in z and 1 in z", "(E x. x in r) or (A y in 1. y = r)",
]))
def test_compatibility_across_nested_universes(seed, text):
    rng = random.Random(seed)
    base = v_stage(4).carrier
    M = random_subset(rng, base, S2.seed_set, 2 + rng.randint(0, 3))
    N = random_subset(rng, base, M.carrier, len(M) + rng.randint(0, 8))
    assert compatibility_pair(parse(text), S2, M, N, 6) == []


def test_compatibility_walk_detects_tampering(monkeypatch):
    import mlogic.checks as checks

    M, N = v_stage(2), v_stage(3)
    psi = parse("E x. r in x")
    real = checks._step

    def tampered(label, sigma, seeds, carrier):
        res = real(label, sigma, seeds, carrier)
        if carrier == N.carrier and len(sigma) == 3 and res is not LEAF:
            return [(t, lab + (Eq(ONE, ONE),)) for t, lab in res]
        return res

    monkeypatch.setattr(checks, "_step", tampered)
    problems = compatibility_pair(psi, S2, M, N, 6)
    assert problems and all("label mismatch" in p for p in problems)
