"""Search trees of deduction chains over a finite universe.

A node is a finite sequence ``sigma`` of HF sets. Its label is an ordered
sequent computed from ``sigma`` alone, starting from the root label
``<not psi(r), not Ext>`` and dispatching on the first formula:

* true literal: the node is a leaf;
* false literal: one child ``0``, the literal rotates to the back;
* ``p and q``: children ``0`` and ``1`` adding ``p`` resp. ``q``;
* ``p or q``: one child ``0`` adding both disjuncts;
* ``A x. t``: one child per carrier element ``a`` adding ``t(a)``;
* ``E x. t``: one child ``0`` adding ``t(b)`` for the first fairness-list
  entry ``b`` whose instance is not already in the sequent.

The head formula is always kept (moved to the back). Bounded quantifiers
restrict the children, resp. the fairness list, to members of the bound.
A universe ``M`` of HF sets stands in for the ambient set; the naturals
``0..k-1`` together with ``r`` stand in for ``omega | {r}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, Union

from . import __version__
from .formula import (
    And, Formula, Literal, Or, Quantifier, SubformulaIndex, WrongArity,
    eval_literal, extensionality, instantiate, negate, substitute,
)
from .hfset import (
    HFSet, Structure, extensional_witness, is_transitive, mostowski, nat,
    render_mapping, render_set,
)
from .parser import render
from .semantics import (
    ORACLE_CEILING, Evaluator, SeedConfig, SeedNotContained, find_submodel,
    truth_in_sequent,
)

__all__ = [
    "Sequent",
    "SearchNode",
    "Leaf",
    "LEAF",
    "ProofTree",
    "BudgetReport",
    "GuidedBranch",
    "Failure",
    "Refuted",
    "Model",
    "Inconclusive",
    "Verdict",
    "WrongArity",
    "EmptyLabel",
    "IncompleteTree",
    "GuidanceFailed",
    "DichotomyViolation",
    "CertificateFailure",
    "DEFAULT_NODE_BUDGET",
    "DEFAULT_DEPTH_BUDGET",
    "DEFAULT_GUIDED_DEPTH",
    "root_label",
    "fairness_list",
    "step",
    "label_of",
    "is_node",
    "expand",
    "guided_branch",
    "fairness_audit",
    "extract_model",
    "verify_soundness",
    "verify_subformula",
    "decide",
    "export_verdict",
    "path_key",
]

DEFAULT_NODE_BUDGET = 100_000
DEFAULT_DEPTH_BUDGET = 1_000
DEFAULT_GUIDED_DEPTH = 200

Sequent = tuple  # tuple[Formula, ...]
Path = tuple  # tuple[HFSet, ...]

ZERO = nat(0)
ONE = nat(1)


class EmptyLabel(RuntimeError):
    pass


class IncompleteTree(ValueError):
    pass


class GuidanceFailed(RuntimeError):
    def __init__(self, prefix: Path, message: str):
        super().__init__(f"guidance failed at {path_key(prefix)}: {message}")
        self.prefix = prefix


class DichotomyViolation(RuntimeError):
    """The oracle and the search tree disagree about the existence of a model.

    ``oracle`` is the oracle's answer, ``outcome`` the tree or budget report.
    """

    def __init__(self, message: str, oracle=None, outcome=None):
        super().__init__(message)
        self.oracle = oracle
        self.outcome = outcome


class CertificateFailure(RuntimeError):
    pass


class Leaf:
    """Marker returned by :func:`step` for a node whose head is a true literal."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "LEAF"


LEAF = Leaf()


@dataclass(frozen=True)
class SearchNode:
    sigma: Path
    label: Sequent


def path_key(sigma: Iterable[HFSet]) -> str:
    return "<" + ",".join(render_set(a, naturals=True) for a in sigma) + ">"


def root_label(psi: Formula, seeds: SeedConfig) -> Sequent:
    """``not psi(r)`` and the NNF negation of extensionality.

    ``psi`` has one free variable, or none (a sentence, where r is unused).
    """
    return (negate(instantiate(psi, seeds.r)), negate(extensionality()))


def fairness_list(sigma: Sequence[HFSet], seeds: SeedConfig) -> list[HFSet]:
    """``r, sigma_0, s_0, sigma_1, s_1, ...`` with the seed set in place of omega.

    Seeds ``s_j`` are interleaved while they last; the remaining seeds (if
    ``sigma`` is short) form the tail.
    """
    return list(_fairness(sigma, seeds))


def _fairness(sigma: Sequence[HFSet], seeds: SeedConfig) -> Iterator[HFSet]:
    # lazy form: the existential rule usually stops after a few entries
    s = seeds.seed_set
    yield seeds.r
    n = len(s)
    for i, a in enumerate(sigma):
        yield a
        if i < n:
            yield s[i]
    yield from s[len(sigma):]


def _members_of(q: Quantifier) -> frozenset | None:
    return q.bound.members if q.bounded else None


def _step(label: Sequent, sigma: Path, seeds: SeedConfig, carrier: tuple) -> Leaf | list:
    if not label:
        raise EmptyLabel(f"empty label at {path_key(sigma)}")
    phi = label[0]
    rest = label[1:]
    if isinstance(phi, Literal):
        if eval_literal(phi):
            return LEAF
        return [(ZERO, rest + (phi,))]
    if isinstance(phi, And):
        return [(ZERO, rest + (phi, phi.left)), (ONE, rest + (phi, phi.right))]
    if isinstance(phi, Or):
        return [(ZERO, rest + (phi, phi.left, phi.right))]
    within = _members_of(phi)
    var, body = phi.var, phi.body
    if phi.universal:
        return [(a, rest + (phi, substitute(body, var, a)))
                for a in carrier if within is None or a in within]
    present = set(rest)
    for b in _fairness(sigma, seeds):
        if within is not None and b not in within:
            continue
        inst = substitute(body, var, b)
        if inst not in present:
            return [(ZERO, rest + (phi, inst))]
    return [(ZERO, rest + (phi,))]


def step(node: SearchNode, seeds: SeedConfig, M: Structure) -> Leaf | list:
    """Children ``(tag, label)`` of ``node`` in canonical order, or LEAF."""
    return _step(node.label, node.sigma, seeds, M.carrier)


def label_of(sigma: Sequence[HFSet], psi: Formula, seeds: SeedConfig, M: Structure) -> Sequent | None:
    """Recompute the label of ``sigma`` by stepping from the root; None if not a node."""
    label = root_label(psi, seeds)
    carrier = M.carrier
    for i, a in enumerate(sigma):
        res = _step(label, tuple(sigma[:i]), seeds, carrier)
        if res is LEAF:
            return None
        for tag, child in res:
            if tag is a:
                label = child
                break
        else:
            return None
    return label


def is_node(sigma: Sequence[HFSet], psi: Formula, seeds: SeedConfig, M: Structure) -> bool:
    return label_of(sigma, psi, seeds, M) is not None


@dataclass(slots=True)
class TreeNode:
    sigma: Path
    label: Sequent
    children: tuple = ()
    leaf: bool = False


@dataclass
class ProofTree:
    """A finite, prefix-closed piece of the search tree, nodes in BFS order.

    ``complete`` means every node has been expanded; a complete tree is the
    whole (finite) search tree.
    """

    nodes: list[TreeNode]
    complete: bool = False
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self._index:
            self._index = {n.sigma: i for i, n in enumerate(self.nodes)}

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes)

    def __contains__(self, sigma) -> bool:
        return tuple(sigma) in self._index

    def node(self, sigma: Sequence[HFSet]) -> TreeNode:
        return self.nodes[self._index[tuple(sigma)]]

    @property
    def root(self) -> TreeNode:
        return self.nodes[0]

    @property
    def depth(self) -> int:
        return max(len(n.sigma) for n in self.nodes)

    def paths(self) -> list[Path]:
        return [n.sigma for n in self.nodes]


@dataclass(frozen=True)
class BudgetReport:
    nodes: int
    frontier_depth: int
    reason: str

    def to_json(self) -> dict:
        return {"nodes": self.nodes, "frontier_depth": self.frontier_depth, "reason": self.reason}


def expand(
    psi: Formula,
    seeds: SeedConfig,
    M: Structure,
    budget: int = DEFAULT_NODE_BUDGET,
    depth_budget: int = DEFAULT_DEPTH_BUDGET,
) -> ProofTree | BudgetReport:
    """Breadth-first expansion of the whole search tree.

    Returns the complete ProofTree when every path ends, or a BudgetReport
    once ``budget`` nodes exist or a node at ``depth_budget`` needs expanding.
    """
    _check_seeds(seeds, M)
    carrier = M.carrier
    nodes = [TreeNode((), root_label(psi, seeds))]
    append = nodes.append
    count = 1
    i = 0
    deepest = 0
    # nodes are appended in BFS order, so the list itself is the queue
    while i < count:
        node = nodes[i]
        i += 1
        sigma = node.sigma
        if len(sigma) >= depth_budget:
            return BudgetReport(count, len(sigma), "depth")
        res = _step(node.label, sigma, seeds, carrier)
        if res is LEAF:
            node.leaf = True
            continue
        first = count
        for tag, label in res:
            if count >= budget:
                return BudgetReport(count, deepest, "nodes")
            append(TreeNode(sigma + (tag,), label))
            count += 1
        node.children = tuple(range(first, count))
        if res:
            deepest = len(sigma) + 1
    return ProofTree(nodes, complete=True)


def _check_seeds(seeds: SeedConfig, M: Structure) -> None:
    pool = M.members
    for s in seeds.seed_set:
        if s not in pool:
            raise SeedNotContained(f"seed {render_set(s)} is not in the universe")


@dataclass
class GuidedBranch:
    """A finite prefix of an infinite branch plus its falsity certificate.

    ``certificate[n]`` is ``truth_in_sequent(M_f, label of path[:n])``, which
    must be None for every ``n``.
    """

    path: Path
    labels: list[Sequent]
    certificate: list

    @property
    def depth(self) -> int:
        return len(self.path)


def _guided_choice(res: list, ev: Evaluator, sigma: Path) -> tuple:
    if len(res) == 1:
        return res[0]
    # conjunction or universal head: take the first child whose new formula is false
    for tag, label in res:
        if not ev(label[-1]):
            return tag, label
    raise GuidanceFailed(sigma, "every child adds a formula true in the model")


def guided_branch(
    psi: Formula,
    seeds: SeedConfig,
    M_f: Structure,
    depth: int = DEFAULT_GUIDED_DEPTH,
) -> GuidedBranch:
    """Walk ``depth`` steps down the tree of ``M_f`` keeping every label false in ``M_f``."""
    _check_seeds(seeds, M_f)
    ev = Evaluator(M_f)
    carrier = M_f.carrier
    label = root_label(psi, seeds)
    sigma: Path = ()
    labels = [label]
    certificate = [truth_in_sequent(ev, label)]
    if certificate[0] is not None:
        raise GuidanceFailed(sigma, f"root formula {certificate[0]} is true in the model")
    for _ in range(depth):
        res = _step(label, sigma, seeds, carrier)
        if res is LEAF:
            raise GuidanceFailed(sigma, "reached a leaf")
        if not res:
            raise GuidanceFailed(sigma, "bounded universal head has no children")
        tag, label = _guided_choice(res, ev, sigma)
        sigma = sigma + (tag,)
        found = truth_in_sequent(ev, label)
        if found is not None:
            raise GuidanceFailed(sigma, f"label formula {found} is true in the model")
        labels.append(label)
        certificate.append(found)
    return GuidedBranch(sigma, labels, certificate)


def fairness_audit(
    psi: Formula,
    seeds: SeedConfig,
    M_f: Structure,
    depth: int = DEFAULT_GUIDED_DEPTH,
    max_extension: int = 20_000,
) -> list[tuple[Formula, HFSet]]:
    """Existential instances still missing after extending the guided branch.

    Audits every existential formula occurring in the labels of the first
    ``depth // 2`` steps, against every element of the model extracted from
    that half-prefix. The branch is extended (up to ``max_extension`` steps
    past ``depth``) until all those instances have appeared. Returns the
    instances that never appeared; an empty list means the audit passed.
    """
    half = depth // 2
    ev = Evaluator(M_f)
    carrier = M_f.carrier
    label = root_label(psi, seeds)
    sigma: Path = ()
    seen: set[Formula] = set(label)
    existentials: list[Formula] = []
    pending: dict[tuple[Formula, HFSet], Formula] = {}

    def collect(lab: Sequent) -> None:
        for phi in lab:
            if isinstance(phi, Quantifier) and not phi.universal and phi not in existentials:
                existentials.append(phi)

    collect(label)
    limit = depth + max_extension
    for n in range(limit):
        if n == half:
            model = extract_model(sigma, seeds)
            for phi in existentials:
                within = _members_of(phi)
                for a in model.carrier:
                    if within is None or a in within:
                        inst = phi.instance(a)
                        if inst not in seen:
                            pending[(phi, a)] = inst
        if n >= half and n >= depth and not pending:
            break
        res = _step(label, sigma, seeds, carrier)
        if res is LEAF or not res:
            raise GuidanceFailed(sigma, "branch ended during fairness audit")
        tag, label = _guided_choice(res, ev, sigma)
        sigma = sigma + (tag,)
        if ev(label[-1]):
            raise GuidanceFailed(sigma, "new label formula is true in the model")
        new = label[-1]
        seen.add(new)
        if n < half:
            collect((new,))
        if pending:
            for key in [k for k, inst in pending.items() if inst is new]:
                del pending[key]
    return list(pending)


def extract_model(path: Sequence[HFSet], seeds: SeedConfig) -> Structure:
    """Carrier = entries of ``path`` together with the seed set."""
    return Structure.of(tuple(path) + seeds.seed_set)


@dataclass(frozen=True)
class Failure:
    """Where a certificate check failed."""

    sigma: Path
    reason: str
    formula: Formula | None = None

    def to_json(self) -> dict:
        return {"node": path_key(self.sigma), "reason": self.reason,
                "formula": None if self.formula is None else render(self.formula)}


def verify_soundness(tree: ProofTree, M: Structure) -> Failure | None:
    """Check that every label of a complete tree contains a formula true in ``M``.

    Nodes are visited leaves first. Each node must also be justified by its
    rule: a leaf's head is a true literal, an empty bounded-universal node's
    head is (vacuously) true, and any other node has a true formula, which the
    children then inherit. Returns None when the tree checks out.
    """
    if not tree.complete:
        raise IncompleteTree("soundness is only defined for a complete tree")
    ev = Evaluator(M)
    for node in reversed(tree.nodes):
        if not node.label:
            return Failure(node.sigma, "empty label")
        head = node.label[0]
        if node.leaf:
            if not (isinstance(head, Literal) and eval_literal(head)):
                return Failure(node.sigma, "leaf head is not a true literal", head)
        elif not node.children:
            if not (isinstance(head, Quantifier) and head.universal and head.bounded and ev(head)):
                return Failure(node.sigma, "childless node is not a vacuous bounded universal", head)
        if truth_in_sequent(ev, node.label) is None:
            return Failure(node.sigma, "no formula of the label is true")
    return None


def verify_subformula(tree: ProofTree | GuidedBranch, roots: Sequence[Formula]) -> Failure | None:
    """Check that every label formula is a closed instance of a subformula of ``roots``."""
    index = SubformulaIndex(roots)
    if isinstance(tree, GuidedBranch):
        items = ((tree.path[:n], lab) for n, lab in enumerate(tree.labels))
    else:
        items = ((n.sigma, n.label) for n in tree.nodes)
    for sigma, label in items:
        for phi in label:
            if phi.free or phi not in index:
                return Failure(sigma, "not an instance of a root subformula", phi)
    return None


@dataclass
class Refuted:
    tree: ProofTree
    root_truth: int
    kind: str = "refuted"


@dataclass
class Model:
    model: Structure
    branch: GuidedBranch
    prefix_model: Structure
    collapse: dict
    image: Structure
    budget: BudgetReport
    kind: str = "model"


@dataclass
class Inconclusive:
    budget: BudgetReport
    kind: str = "inconclusive"


Verdict = Union[Refuted, Model, Inconclusive]


def decide(
    psi: Formula,
    seeds: SeedConfig,
    M: Structure,
    budget: int = DEFAULT_NODE_BUDGET,
    depth_budget: int = DEFAULT_DEPTH_BUDGET,
    guided_depth: int = DEFAULT_GUIDED_DEPTH,
    use_oracle: bool | None = None,
) -> Verdict:
    """Decide which side of the dichotomy ``psi(r)`` falls on over ``M``.

    Either a smallest extensional submodel of ``psi(r)`` exists (Model, with a
    certified branch prefix and the transitive collapse), or the search tree
    is finite (Refuted, with checked certificates). Without the oracle a tree
    that outgrows the budget gives Inconclusive. Disagreement between oracle
    and tree raises DichotomyViolation.
    """
    _check_seeds(seeds, M)
    roots = root_label(psi, seeds)
    if use_oracle is None:
        use_oracle = len(M) <= ORACLE_CEILING
    oracle = find_submodel(M, seeds, psi, allow_large=True) if use_oracle else None
    outcome = expand(psi, seeds, M, budget, depth_budget)

    if oracle is not None:
        if isinstance(outcome, ProofTree):
            raise DichotomyViolation(
                f"oracle found the model {oracle.render(True)} but the search tree is finite "
                f"({len(outcome)} nodes)", oracle, outcome)
        branch = guided_branch(psi, seeds, oracle, guided_depth)
        failed = verify_subformula(branch, roots)
        if failed is not None:
            raise CertificateFailure(f"subformula property fails on the guided branch: {failed.to_json()}")
        prefix_model = extract_model(branch.path, seeds)
        if not prefix_model.issubset(oracle):
            raise CertificateFailure("branch left the oracle model")
        mapping, image = mostowski(oracle)
        _check_model(oracle, psi, seeds, mapping, image)
        return Model(oracle, branch, prefix_model, mapping, image, outcome)

    if isinstance(outcome, BudgetReport):
        if use_oracle:
            raise DichotomyViolation(
                f"oracle found no model but the search tree exceeded its budget "
                f"({outcome.nodes} nodes, frontier depth {outcome.frontier_depth}, {outcome.reason})",
                None, outcome)
        return Inconclusive(outcome)

    failed = verify_soundness(outcome, M)
    if failed is not None:
        raise CertificateFailure(f"soundness check failed: {failed.to_json()}")
    failed = verify_subformula(outcome, roots)
    if failed is not None:
        raise CertificateFailure(f"subformula check failed: {failed.to_json()}")
    root_truth = truth_in_sequent(M, outcome.root.label)
    return Refuted(outcome, root_truth)


def _check_model(model: Structure, psi: Formula, seeds: SeedConfig,
                 mapping: dict, image: Structure) -> None:
    if extensional_witness(model) is not None:
        raise CertificateFailure("model is not extensional")
    if not Evaluator(model)(instantiate(psi, seeds.r)):
        raise CertificateFailure("model does not satisfy psi(r)")
    if not is_transitive(image.carrier):
        raise CertificateFailure("collapse image is not transitive")
    if mapping.get(seeds.r) is not seeds.r:
        raise CertificateFailure("collapse moves r")


def _manifest(psi_text: str, seeds: SeedConfig, M: Structure, budget: int,
              depth_budget: int, guided_depth: int) -> dict:
    return {
        "psi": psi_text,
        "seeds": seeds.describe(),
        "universe": M.render(naturals=True),
        "universe_size": len(M),
        "node_budget": budget,
        "depth_budget": depth_budget,
        "guided_depth": guided_depth,
        "engine": f"mlogic {__version__}",
    }


def export_tree(tree: ProofTree) -> dict:
    out = {}
    text: dict[Formula, str] = {}
    for node in tree.nodes:
        labels = []
        for phi in node.label:
            t = text.get(phi)
            if t is None:
                t = text[phi] = render(phi, naturals=True)
            labels.append(t)
        entry = {"label": labels}
        if node.leaf:
            entry["leaf"] = True
        elif not node.children:
            entry["closed"] = True
        out[path_key(node.sigma)] = entry
    return out


def export_verdict(
    verdict: Verdict,
    psi_text: str,
    seeds: SeedConfig,
    M: Structure,
    budget: int = DEFAULT_NODE_BUDGET,
    depth_budget: int = DEFAULT_DEPTH_BUDGET,
    guided_depth: int = DEFAULT_GUIDED_DEPTH,
) -> str:
    """Deterministic JSON text for a verdict."""
    doc: dict = {"manifest": _manifest(psi_text, seeds, M, budget, depth_budget, guided_depth),
                 "verdict": verdict.kind}
    if isinstance(verdict, Refuted):
        doc["tree_nodes"] = len(verdict.tree)
        doc["tree_depth"] = verdict.tree.depth
        doc["root_true_formula"] = verdict.root_truth
        doc["tree"] = export_tree(verdict.tree)
    elif isinstance(verdict, Model):
        doc["model"] = verdict.model.render(naturals=True)
        doc["model_size"] = len(verdict.model)
        doc["collapse"] = render_mapping(verdict.collapse, naturals=True)
        doc["image"] = verdict.image.render(naturals=True)
        doc["branch"] = {
            "depth": verdict.branch.depth,
            "path": [render_set(a, naturals=True) for a in verdict.branch.path],
            "certificate": verdict.branch.certificate,
            "prefix_model": verdict.prefix_model.render(naturals=True),
        }
        doc["budget"] = verdict.budget.to_json()
    else:
        doc["budget"] = verdict.budget.to_json()
    return json.dumps(doc, indent=1, ensure_ascii=False) + "\n"
