import pytest
from hypothesis import given
from hypothesis import strategies as st

from mlogic.formula import (
    And, Eq, Exists, ExistsIn, Forall, ForallIn, Mem, NotEq, NotMem, Or, Quantifier,
    SubformulaIndex, WrongArity, classify, extensionality, height, instantiate,
    is_instance_of_subformula, negate, substitute, subformulas,
)
from mlogic.hfset import EMPTY, make, nat
from mlogic.parser import parse, render

from conftest import formulas

ONE = nat(1)


def test_negate_examples():
    assert negate(Mem("x", "y")) is NotMem("x", "y")
    p, q = Mem("x", "y"), Eq("x", EMPTY)
    assert negate(And(p, q)) is Or(negate(p), negate(q))
    assert negate(Forall("x", p)) is Exists("x", negate(p))
    assert negate(ForallIn("x", "y", p)) is ExistsIn("x", "y", negate(p))


def test_interning():
    assert And(Mem("x", "y"), Eq("x", "y")) is And(Mem("x", "y"), Eq("x", "y"))
    assert Mem("x", EMPTY) is not Mem("x", ONE)


def test_substitute_examples():
    assert substitute(Mem("x", EMPTY), "x", ONE) is Mem(ONE, EMPTY)
    phi = Exists("y", Mem("x", "y"))
    assert substitute(phi, "z", ONE) is phi
    assert substitute(phi, "x", EMPTY) is Exists("y", Mem(EMPTY, "y"))
    # bound occurrences stay untouched
    assert substitute(Forall("x", Mem("x", "y")), "x", ONE) is Forall("x", Mem("x", "y"))
    assert substitute(ForallIn("y", "x", Mem("y", "y")), "x", ONE) is ForallIn("y", ONE, Mem("y", "y"))


def test_shadowed_binders_are_renamed_apart():
    inner = Forall("x", Mem("x", "x"))
    outer = Exists("x", And(Mem("x", EMPTY), inner))
    body = outer.body
    assert body.right.var != "x"
    # the meaning is unchanged: instantiating the outer x leaves the inner binder alone
    inst = outer.instance(ONE)
    assert inst.left is Mem(ONE, EMPTY)
    assert isinstance(inst.right, Forall)


def test_instantiate():
    assert instantiate(parse("x = x"), EMPTY) is Eq(EMPTY, EMPTY)
    sentence = parse("E x. x != x")
    assert instantiate(sentence, ONE) is sentence
    with pytest.raises(WrongArity):
        instantiate(parse("x = y"), EMPTY)


def test_classify_examples():
    assert classify(Mem("x", "y")).delta0
    c = classify(Exists("x", Eq("x", "x")))
    assert c.kind == "Σ" and c.n == 1 and c.liberal_sigma and not c.liberal_pi
    assert str(classify(parse("forall x. exists y. y in x"))) == "Π2"
    assert str(classify(parse("A x in y. E z in x. z = z"))) == "Δ0"
    assert str(classify(parse("A x. x = x and (E y. y = y)"))) == "Π2"
    assert str(classify(parse("(A x. x = x) and (E y. y = y)"))) == "Δ2"


def test_height_examples():
    assert height(Mem("x", "y")) == 0
    assert height(And(Mem("x", "y"), Eq("x", "y"))) == 1
    assert height(Forall("x", Or(Mem("x", "y"), Eq("x", "y")))) == 2


def reference_levels(phi):
    """Max over root-to-leaf paths of the unbounded-quantifier block count."""
    def paths(f, prefix):
        if isinstance(f, (And, Or)):
            yield from paths(f.left, prefix)
            yield from paths(f.right, prefix)
        elif isinstance(f, Quantifier):
            if f.bounded:
                yield from paths(f.body, prefix)
            else:
                yield from paths(f.body, prefix + ("A" if f.universal else "E",))
        else:
            yield prefix

    sigma = pi = 0
    for p in paths(phi, ()):
        blocks = [k for i, k in enumerate(p) if i == 0 or p[i - 1] != k]
        if not blocks:
            continue
        n = len(blocks)
        sigma = max(sigma, n if blocks[0] == "E" else n + 1)
        pi = max(pi, n if blocks[0] == "A" else n + 1)
    return sigma, pi


@given(formulas(depth=6))
def test_classify_matches_path_reference(phi):
    c = classify(phi)
    assert (c.sigma_level, c.pi_level) == reference_levels(phi)
    kinds = {type(s) for s in subformulas(phi)}
    assert c.liberal_sigma == (Forall not in kinds)
    assert c.liberal_pi == (Exists not in kinds)


@given(formulas(depth=6))
def test_negation_involution(phi):
    assert negate(negate(phi)) is phi


@given(formulas(depth=6))
def test_negation_swaps_sigma_and_pi(phi):
    a, b = classify(phi), classify(negate(phi))
    assert (a.sigma_level, a.pi_level) == (b.pi_level, b.sigma_level)
    assert (a.liberal_sigma, a.liberal_pi) == (b.liberal_pi, b.liberal_sigma)
    assert height(phi) == height(negate(phi))


@given(formulas(depth=5), st.sampled_from(["a", "b", "x"]), st.sampled_from([EMPTY, ONE, nat(2)]))
def test_substitution_commutes_with_negation(phi, v, a):
    assert substitute(negate(phi), v, a) is negate(substitute(phi, v, a))
    assert v not in substitute(phi, v, a).free


def test_subformula_instances():
    theta = Mem("x", "y")
    root = Forall("y", Exists("x", theta))
    assert is_instance_of_subformula(Mem(ONE, EMPTY), [root])
    assert is_instance_of_subformula(Exists("x", Mem("x", ONE)), [root])
    assert not is_instance_of_subformula(Eq(ONE, EMPTY), [root])
    neg_ext = negate(extensionality())
    assert is_instance_of_subformula(neg_ext, [neg_ext])
    idx = SubformulaIndex([root])
    assert Mem(EMPTY, EMPTY) in idx
    assert Eq(EMPTY, EMPTY) not in idx


@given(formulas(depth=4, free=("a",)), st.sampled_from([EMPTY, ONE, nat(2)]))
def test_every_instance_of_every_subformula_is_recognized(phi, c):
    for sub in subformulas(phi):
        closed = sub
        for v in sorted(sub.free):
            closed = substitute(closed, v, c)
        assert is_instance_of_subformula(closed, [phi])


def test_extensionality_text():
    text = "A x. A y. (E z. z in x and z notin y or z in y and z notin x) or x = y"
    assert render(extensionality()) == text
    assert parse(text) is extensionality()
    assert parse("A x. A y. (A z. (z in x <-> z in y)) -> x = y") is extensionality()
    assert extensionality().free == frozenset()
    assert NotEq("x", "y") in set(subformulas(negate(extensionality())))
    assert make([EMPTY]) is ONE
