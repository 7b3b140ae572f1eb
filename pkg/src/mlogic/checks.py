"""Randomized property suites shared by ``mlogic --mode selfcheck`` and the test-suite.

Every suite takes an explicit ``random.Random`` seed and returns a list of
failure descriptions (empty on success), so reports are reproducible.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .deduction import (
    LEAF, ProofTree, _step, expand, extract_model, guided_branch, path_key,
    root_label, verify_soundness, verify_subformula,
)
from .formula import (
    And, Eq, Exists, ExistsIn, Forall, ForallIn, Formula, Mem, NotEq, NotMem, Or,
    negate,
)
from .hfset import (
    HFSet, Structure, extensional_witness, is_transitive, mostowski, nat,
    render_set, v_stage,
)
from .parser import parse, render
from .semantics import SeedConfig, find_submodel
from .wfcheck import (
    FiniteRelation, end_extension_order, product_lift, wf_fast, wf_naive,
)

VARIABLE_POOL = ("x", "y", "z", "u", "v", "w")
_LITERALS = (Mem, NotMem, Eq, NotEq)


def random_hfset(rng: random.Random, stage: int = 3) -> HFSet:
    return rng.choice(v_stage(stage).carrier)


def random_formula(
    rng: random.Random,
    depth: int,
    free: Sequence[str] = ("r",),
    constants: Sequence[HFSet] | None = None,
    leaf_bias: float = 0.25,
    _bound: tuple[str, ...] = (),
) -> Formula:
    """A random NNF formula of height at most ``depth``.

    Variables come from ``free`` and the enclosing binders; constants from
    ``constants`` (naturals 0..2 by default).
    """
    if constants is None:
        constants = (nat(0), nat(1), nat(2))
    names = tuple(free) + _bound

    def term():
        pool = list(names) + list(constants)
        return rng.choice(pool)

    if depth == 0 or rng.random() < leaf_bias:
        return rng.choice(_LITERALS)(term(), term())
    kind = rng.choice(("and", "or", "forall", "exists", "forall_in", "exists_in"))
    if kind in ("and", "or"):
        left = random_formula(rng, depth - 1, free, constants, leaf_bias, _bound)
        right = random_formula(rng, depth - 1, free, constants, leaf_bias, _bound)
        return (And if kind == "and" else Or)(left, right)
    fresh = [v for v in VARIABLE_POOL if v not in names]
    var = rng.choice(fresh) if fresh else rng.choice(VARIABLE_POOL)
    body = random_formula(rng, depth - 1, free, constants, leaf_bias, _bound + (var,))
    if kind == "forall":
        return Forall(var, body)
    if kind == "exists":
        return Exists(var, body)
    bound = term()
    if bound == var:
        bound = constants[0]
    return (ForallIn if kind == "forall_in" else ExistsIn)(var, bound, body)


def random_subset(rng: random.Random, base: Sequence[HFSet], must: Sequence[HFSet], size: int) -> Structure:
    rest = [a for a in base if a not in set(must)]
    extra = rng.sample(rest, max(0, min(len(rest), size - len(set(must)))))
    return Structure.of(list(must) + extra)


def random_relation(rng: random.Random, n: int, density: float | None = None) -> FiniteRelation:
    density = rng.choice((0.05, 0.1, 0.2, 0.35)) if density is None else density
    dom = list(range(n))
    pairs = [(a, b) for a in dom for b in dom if rng.random() < density]
    return FiniteRelation.of(dom, pairs)


def random_dag(rng: random.Random, n: int) -> FiniteRelation:
    order = list(range(n))
    rng.shuffle(order)
    rank = {x: i for i, x in enumerate(order)}
    pairs = [(a, b) for a in range(n) for b in range(n) if rank[a] < rank[b] and rng.random() < 0.3]
    return FiniteRelation.of(range(n), pairs)


# --- suites -----------------------------------------------------------------


def suite_parser(rng: random.Random, count: int, depth: int = 6) -> list[str]:
    failures = []
    for i in range(count):
        free = rng.sample(["a", "b", "r"], rng.randint(0, 2))
        consts = [random_hfset(rng) for _ in range(3)]
        phi = random_formula(rng, depth, free=free, constants=consts, leaf_bias=0.15)
        text = render(phi)
        back = parse(text)
        if back is not phi:
            failures.append(f"parser #{i}: round trip changed {text!r} into {render(back)!r}")
        elif render(back) != text:
            failures.append(f"parser #{i}: re-render differs for {text!r}")
    return failures


def compatibility_pair(psi: Formula, seeds: SeedConfig, M: Structure, N: Structure, depth: int) -> list[str]:
    """Walk the M-tree to ``depth`` alongside an independent N-tree walk.

    At every M-node the N-node with the same sequence must exist with the
    same label, and the M-children must be exactly the N-children whose tag
    lies in M (same order, same labels). By induction this gives agreement
    of node membership and labels for every sequence over M up to ``depth``.
    """
    failures = []
    M_pool = M.members
    queue = deque([((), root_label(psi, seeds), root_label(psi, seeds))])
    while queue:
        sigma, lab_m, lab_n = queue.popleft()
        if lab_m != lab_n:
            failures.append(f"label mismatch at {path_key(sigma)}")
            continue
        if len(sigma) >= depth:
            continue
        res_m = _step(lab_m, sigma, seeds, M.carrier)
        res_n = _step(lab_n, sigma, seeds, N.carrier)
        if (res_m is LEAF) != (res_n is LEAF):
            failures.append(f"leaf mismatch at {path_key(sigma)}")
            continue
        if res_m is LEAF:
            continue
        restricted = [(t, lab) for t, lab in res_n if t in M_pool]
        if [t for t, _ in res_m] != [t for t, _ in restricted]:
            failures.append(f"children mismatch at {path_key(sigma)}")
            continue
        for (tag, cm), (_, cn) in zip(res_m, restricted):
            queue.append((sigma + (tag,), cm, cn))
    return failures


def suite_compatibility(
    rng: random.Random,
    formulas: Sequence[tuple[Formula, SeedConfig]],
    pairs: int,
    depth: int = 8,
    base_stage: int = 4,
    max_m_extra: int = 3,
) -> list[str]:
    base = v_stage(base_stage).carrier
    failures = []
    for i in range(pairs):
        psi, seeds = formulas[i % len(formulas)]
        S = seeds.seed_set
        M = random_subset(rng, base, S, len(S) + rng.randint(0, max_m_extra))
        N = random_subset(rng, base, M.carrier, len(M) + rng.randint(0, len(base) - len(M)))
        for msg in compatibility_pair(psi, seeds, M, N, depth):
            failures.append(f"pair #{i} ({render(psi)}; M={M.render(True)}; N={N.render(True)}): {msg}")
    return failures


def suite_collapse(rng: random.Random, count: int, max_size: int = 16) -> list[str]:
    base = v_stage(4).carrier
    failures = []
    done = 0
    attempts = 0
    while done < count and attempts < 50 * count:
        attempts += 1
        M = Structure.of(rng.sample(base, rng.randint(1, max_size)))
        if extensional_witness(M) is not None:
            continue
        done += 1
        c, N = mostowski(M)
        if not is_transitive(N.carrier):
            failures.append(f"collapse image of {M.render(True)} is not transitive")
        if len(set(c.values())) != len(M):
            failures.append(f"collapse of {M.render(True)} is not injective")
        for a in M.carrier:
            for b in M.carrier:
                if (a in b.members) != (c[a] in c[b].members):
                    failures.append(f"collapse of {M.render(True)} breaks membership at {render_set(a)}, {render_set(b)}")
        # elements of a transitive part of the carrier are fixed points
        T = [a for a in M.carrier if _hereditarily_inside(a, M.members)]
        for a in T:
            if c[a] is not a:
                failures.append(f"collapse of {M.render(True)} moves {render_set(a)} inside a transitive part")
    return failures


def _hereditarily_inside(a: HFSet, pool: frozenset) -> bool:
    return all(x in pool and _hereditarily_inside(x, pool) for x in a.elements)


def suite_wf(rng: random.Random, count: int, max_domain: int = 12) -> list[str]:
    failures = []
    for i in range(count):
        n = rng.randint(0, max_domain)
        R = random_relation(rng, n) if i % 2 else random_dag(rng, n)
        naive = wf_naive(R) is True
        fast = wf_fast(R) is True
        if naive != fast:
            failures.append(f"relation #{i}: naive={naive} fast={fast}")
    return failures


def suite_product(rng: random.Random, count: int, max_domain: int = 6) -> list[str]:
    failures = []
    for i in range(count):
        n = rng.randint(0, max_domain)
        R = random_relation(rng, n) if i % 2 else random_dag(rng, n)
        Y = list(range(rng.randint(1, 3)))
        lifted = product_lift(R, Y)
        base_fast = wf_fast(R) is True
        if (wf_fast(lifted) is True) != base_fast:
            failures.append(f"product #{i}: wf_fast not preserved/reflected")
        if len(lifted.domain) <= 15 and (wf_naive(lifted) is True) != (wf_naive(R) is True):
            failures.append(f"product #{i}: wf_naive not preserved/reflected")
    return failures


def tree_checks(tree: ProofTree, M: Structure, roots: Sequence[Formula]) -> list[str]:
    failures = []
    bad = verify_soundness(tree, M)
    if bad is not None:
        failures.append(f"soundness: {bad.to_json()}")
    bad = verify_subformula(tree, roots)
    if bad is not None:
        failures.append(f"subformula: {bad.to_json()}")
    if wf_fast(end_extension_order(tree.paths())) is not True:
        failures.append("end-extension order is not well-founded")
    return failures


def mutate_label(tree: ProofTree, index: int = -1) -> ProofTree:
    """Copy of ``tree`` with an alien literal appended to one label (negative control)."""
    from .deduction import TreeNode

    # every literal shape is an instance of some extensionality subformula, so
    # the alien has to be a compound shape no root contains
    alien = ForallIn("p", nat(3), ExistsIn("q", "p", And(Eq("p", "q"), Eq("q", "p"))))
    nodes = [TreeNode(n.sigma, n.label, n.children, n.leaf) for n in tree.nodes]
    target = nodes[index]
    target.label = target.label + (alien,)
    return ProofTree(nodes, complete=tree.complete)


def suite_trees(
    cases: Sequence[tuple[Formula, SeedConfig, Structure]],
    budget: int,
    inject_mutation: bool = False,
) -> list[str]:
    """Soundness, subformula and well-foundedness checks on every finite tree."""
    failures = []
    for psi, seeds, M in cases:
        out = expand(psi, seeds, M, budget)
        if not isinstance(out, ProofTree):
            continue
        if inject_mutation:
            out = mutate_label(out)
        for msg in tree_checks(out, M, root_label(psi, seeds)):
            failures.append(f"{render(psi)} over {M.render(True)}: {msg}")
    return failures


def suite_models(
    cases: Sequence[tuple[Formula, SeedConfig, Structure]],
    depth: int,
) -> list[str]:
    """Guided-branch certificates and collapse checks for every oracle model."""
    failures = []
    for psi, seeds, M in cases:
        M_f = find_submodel(M, seeds, psi)
        if M_f is None:
            continue
        try:
            branch = guided_branch(psi, seeds, M_f, depth)
        except Exception as err:  # noqa: BLE001 - reported, not raised
            failures.append(f"{render(psi)}: {err}")
            continue
        if any(c is not None for c in branch.certificate) or len(branch.certificate) != depth + 1:
            failures.append(f"{render(psi)}: bad certificate")
        bad = verify_subformula(branch, root_label(psi, seeds))
        if bad is not None:
            failures.append(f"{render(psi)}: branch subformula {bad.to_json()}")
        if not extract_model(branch.path, seeds).issubset(M_f):
            failures.append(f"{render(psi)}: branch leaves the model")
        c, N = mostowski(M_f)
        if not is_transitive(N.carrier) or c[seeds.r] is not seeds.r:
            failures.append(f"{render(psi)}: collapse check failed")
    return failures


@dataclass
class SuiteResult:
    name: str
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def run_suites(suites: Sequence[tuple[str, Callable[[], list[str]]]]) -> list[SuiteResult]:
    return [SuiteResult(name, fn()) for name, fn in suites]


def default_formulas() -> list[tuple[Formula, SeedConfig]]:
    seeds = SeedConfig.from_naturals(2, [])
    texts = [
        "A x. A y. (A z. (z in x <-> z in y)) -> x = y",
        "E x. r in x",
        "A x. E y. x in y",
        "E x. x != x",
        "r = r",
        "E x. A y. y notin x",
        "E z. 0 in z and 1 in z",
        "A x in 2. A y in 2. E z. x in z and y in z",
    ]
    return [(parse(t), seeds) for t in texts]


def _negated_ext() -> Formula:
    return negate(parse("A x. A y. (A z. (z in x <-> z in y)) -> x = y"))
