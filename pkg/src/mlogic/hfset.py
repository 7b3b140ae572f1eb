"""Hereditarily finite sets.

Values are interned, so two ``HFSet`` objects are equal exactly when they are
the same object, and equality is extensional by construction. All orderings
that matter for reproducibility go through :attr:`HFSet.key`:
rank first, then cardinality, then the element keys in canonical order.
"""

from __future__ import annotations

import itertools
import os
import threading
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

__all__ = [
    "HFSet",
    "Structure",
    "StageTooLarge",
    "NonExtensional",
    "EMPTY",
    "make",
    "nat",
    "as_nat",
    "v_stage",
    "render_set",
    "is_transitive",
    "extensional_witness",
    "mostowski",
    "max_stage",
]

DEFAULT_MAX_STAGE = 5
MAX_STAGE_ENV = "MLOGIC_SEED_MAX_STAGE"


class StageTooLarge(ValueError):
    pass


class NonExtensional(ValueError):
    def __init__(self, witness: tuple["HFSet", "HFSet"]):
        a, b = witness
        super().__init__(
            f"structure is not extensional: {render_set(a)} and {render_set(b)} "
            "have the same members inside the carrier"
        )
        self.witness = witness


_intern: dict[frozenset, "HFSet"] = {}
_intern_lock = threading.Lock()


class HFSet:
    """A canonical hereditarily finite set. Build with :func:`make`."""

    __slots__ = ("members", "elements", "rank", "key", "_hash", "__weakref__")

    members: frozenset
    elements: tuple
    rank: int
    key: tuple

    def __new__(cls, *args, **kwargs):
        raise TypeError("use hfset.make() to build sets")

    @classmethod
    def _create(cls, members: frozenset) -> "HFSet":
        self = object.__new__(cls)
        elements = tuple(sorted(members, key=_key))
        rank = 1 + max((e.rank for e in elements), default=-1)
        self.members = members
        self.elements = elements
        self.rank = rank
        self.key = (rank, len(elements), tuple(e.key for e in elements))
        # from the element hashes; hashing the nested key would walk the whole DAG
        self._hash = hash((rank, len(elements), tuple(e._hash for e in elements)))
        return self

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        return self is other

    def __lt__(self, other: "HFSet") -> bool:
        return self.key < other.key

    def __le__(self, other: "HFSet") -> bool:
        return self.key <= other.key

    def __gt__(self, other: "HFSet") -> bool:
        return self.key > other.key

    def __ge__(self, other: "HFSet") -> bool:
        return self.key >= other.key

    def __contains__(self, item: object) -> bool:
        return item in self.members

    def __iter__(self) -> Iterator["HFSet"]:
        return iter(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __reduce__(self):
        return (make, (self.elements,))

    def __repr__(self) -> str:
        return f"HFSet({render_set(self)})"

    def __str__(self) -> str:
        return render_set(self)


def _key(s: HFSet) -> tuple:
    return s.key


def make(elems: Iterable[HFSet] = ()) -> HFSet:
    """Return the set whose elements are ``elems`` (duplicates dropped)."""
    members = frozenset(elems)
    found = _intern.get(members)
    if found is not None:
        return found
    for e in members:
        if not isinstance(e, HFSet):
            raise TypeError(f"HFSet elements must be HFSet, got {type(e).__name__}")
    with _intern_lock:
        found = _intern.get(members)
        if found is None:
            found = HFSet._create(members)
            _intern[members] = found
    return found


EMPTY = make()

_nat_cache: list[HFSet] = [EMPTY]
_nat_index: dict[HFSet, int] = {EMPTY: 0}


def nat(k: int) -> HFSet:
    """Von Neumann natural: ``nat(0) = {}``, ``nat(k+1) = nat(k) | {nat(k)}``."""
    if k < 0:
        raise ValueError("naturals are non-negative")
    while len(_nat_cache) <= k:
        prev = _nat_cache[-1]
        nxt = make(prev.elements + (prev,))
        _nat_index[nxt] = len(_nat_cache)
        _nat_cache.append(nxt)
    return _nat_cache[k]


def as_nat(s: HFSet) -> int | None:
    """The ``k`` with ``nat(k) == s``, or None if ``s`` is not a natural."""
    if s in _nat_index:
        return _nat_index[s]
    # a natural of rank k has exactly k elements
    if len(s) == s.rank and s == nat(s.rank):
        return s.rank
    return None


def render_set(s: HFSet, naturals: bool = False) -> str:
    """Nested-brace rendering, elements in canonical order.

    With ``naturals=True`` every von Neumann natural (at any depth) is written
    as a decimal, e.g. ``{0,2}``.
    """
    if naturals:
        k = as_nat(s)
        if k is not None:
            return str(k)
    return "{" + ",".join(render_set(e, naturals) for e in s.elements) + "}"


def max_stage() -> int:
    raw = os.environ.get(MAX_STAGE_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_MAX_STAGE
    return int(raw)


@dataclass(frozen=True)
class Structure:
    """A finite set of HF sets, read as the structure (carrier, membership)."""

    carrier: tuple[HFSet, ...]

    def __post_init__(self):
        object.__setattr__(self, "carrier", tuple(sorted(set(self.carrier), key=_key)))

    @classmethod
    def of(cls, elems: Iterable[HFSet]) -> "Structure":
        return cls(tuple(elems))

    @property
    def members(self) -> frozenset:
        return frozenset(self.carrier)

    def __contains__(self, item: object) -> bool:
        return item in self.members

    def __iter__(self) -> Iterator[HFSet]:
        return iter(self.carrier)

    def __len__(self) -> int:
        return len(self.carrier)

    def issubset(self, other: "Structure | Iterable[HFSet]") -> bool:
        return self.members <= frozenset(other)

    def render(self, naturals: bool = False) -> str:
        return "{" + ",".join(render_set(a, naturals) for a in self.carrier) + "}"

    def __repr__(self) -> str:
        return f"Structure({self.render()})"


def v_stage(k: int, limit: int | None = None) -> Structure:
    """The k-th cumulative stage: ``V_0 = {}``, ``V_{k+1} = P(V_k)``."""
    if k < 0:
        raise ValueError("stage index must be non-negative")
    limit = max_stage() if limit is None else limit
    if k > limit:
        raise StageTooLarge(f"stage {k} exceeds the configured maximum {limit} (set {MAX_STAGE_ENV})")
    stage: list[HFSet] = []
    for _ in range(k):
        stage = [
            make(combo)
            for size in range(len(stage) + 1)
            for combo in itertools.combinations(stage, size)
        ]
    return Structure(tuple(stage))


def is_transitive(elems: Iterable[HFSet]) -> bool:
    pool = frozenset(elems)
    return all(x in pool for a in pool for x in a.elements)


def _traces(carrier: tuple[HFSet, ...]) -> dict[HFSet, frozenset]:
    pool = frozenset(carrier)
    return {a: a.members & pool for a in carrier}


def extensional_witness(M: Structure) -> tuple[HFSet, HFSet] | None:
    """Least pair of distinct carrier elements with the same carrier-relative members.

    Pairs are compared lexicographically in canonical order; None means the
    structure is extensional.
    """
    groups: dict[frozenset, list[HFSet]] = {}
    for a, trace in _traces(M.carrier).items():
        groups.setdefault(trace, []).append(a)
    best = None
    for group in groups.values():
        if len(group) > 1:
            pair = (group[0], group[1])
            if best is None or (pair[0].key, pair[1].key) < (best[0].key, best[1].key):
                best = pair
    return best


def mostowski(M: Structure) -> tuple[dict[HFSet, HFSet], Structure]:
    """Transitive collapse ``c(a) = {c(x) | x in carrier, x in a}``.

    Raises NonExtensional when the collapse would not be injective.
    """
    witness = extensional_witness(M)
    if witness is not None:
        raise NonExtensional(witness)
    pool = M.members
    mapping: dict[HFSet, HFSet] = {}
    # carrier members of a have strictly smaller rank than a
    for a in sorted(M.carrier, key=lambda s: s.rank):
        mapping[a] = make(mapping[x] for x in a.elements if x in pool)
    ordered = {a: mapping[a] for a in M.carrier}
    return ordered, Structure(tuple(ordered.values()))


def render_mapping(mapping: Mapping[HFSet, HFSet], naturals: bool = False) -> list[list[str]]:
    return [[render_set(a, naturals), render_set(b, naturals)] for a, b in mapping.items()]
