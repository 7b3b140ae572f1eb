"""Corpus files and universe specs.

A corpus line is ``name | formula | k | r | universe`` with ``#`` comments.
Universe specs are ``rank:N``, ``inline:{a, b, ...}`` or ``file:PATH`` (a
file holding one inline set literal).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .formula import Exists, Forall, Formula, WrongArity, height, subformulas
from .hfset import Structure, nat, v_stage
from .parser import parse, parse_set, render

__all__ = [
    "Case",
    "parse_psi",
    "CorpusError",
    "parse_universe",
    "parse_r",
    "load_corpus",
    "bundled_corpus_path",
    "generate_corpus",
    "RANDOM_FORMULA_SEED",
    "RANDOM_UNIVERSE_SEED",
]

RANDOM_FORMULA_SEED = 20261016
RANDOM_UNIVERSE_SEED = 4


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class Case:
    name: str
    formula: str
    k: int
    r: tuple[int, ...]
    universe: str
    line: int = 0

    def parsed(self) -> Formula:
        return parse_psi(self.formula)


def parse_psi(text: str) -> Formula:
    """Parse ``psi``; it may have at most one free variable, which stands for ``r``."""
    phi = parse(text)
    if len(phi.free) > 1:
        raise WrongArity(f"psi may have at most one free variable, found {', '.join(sorted(phi.free))}")
    return phi


def parse_r(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(int(p) for p in text.split(","))
    except ValueError:
        raise CorpusError(f"r must be comma-separated naturals, got {text!r}") from None


def parse_universe(spec: str, base: Path | None = None) -> Structure:
    spec = spec.strip()
    kind, sep, arg = spec.partition(":")
    if not sep:
        raise CorpusError(f"universe spec {spec!r} needs a rank:, inline: or file: prefix")
    if kind == "rank":
        try:
            return v_stage(int(arg))
        except ValueError as err:
            raise CorpusError(str(err)) from None
    if kind == "inline":
        return Structure.of(parse_set(arg).elements)
    if kind == "file":
        path = Path(arg)
        if base is not None and not path.is_absolute():
            path = base / path
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as err:
            raise CorpusError(f"cannot read universe file {path}: {err.strerror}") from None
        return Structure.of(parse_set(text.strip()).elements)
    raise CorpusError(f"unknown universe kind {kind!r}")


def load_corpus(path: Path | str) -> list[Case]:
    path = Path(path)
    cases = []
    names = set()
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split("|")]
        if len(parts) != 5:
            raise CorpusError(f"{path}:{lineno}: expected 5 fields, got {len(parts)}")
        name, formula, k, r, universe = parts
        if name in names:
            raise CorpusError(f"{path}:{lineno}: duplicate case name {name!r}")
        names.add(name)
        try:
            k_val = int(k)
        except ValueError:
            raise CorpusError(f"{path}:{lineno}: k must be a natural, got {k!r}") from None
        cases.append(Case(name, formula, k_val, parse_r(r), universe, lineno))
    return cases


def bundled_corpus_path() -> Path:
    return Path(str(resources.files("mlogic") / "data" / "corpus.txt"))


# --- generation of the bundled corpus ---------------------------------------

EXT = "A x. A y. (A z. (z in x <-> z in y)) -> x = y"

HAND_WRITTEN = [
    ("ext", EXT, ""),
    ("not_ext", "!(" + EXT + ")", ""),
    ("r_in_some", "E x. r in x", ""),
    ("all_in_some", "A x. E y. x in y", ""),
    ("r_refl", "r = r", ""),
    ("r_irrefl", "r != r", ""),
    ("empty_exists", "E x. A y. y notin x", ""),
    ("contradiction", "E x. x != x", ""),
    ("r_empty", "A x. x notin r", ""),
    ("r_inhabited", "E x in r. x = x", "0"),
    ("self_member", "E x. x in x", ""),
    ("two_distinct", "E x. E y. x != y", ""),
    ("three_distinct", "E x. E y. E z. x != y and y != z and x != z", ""),
    ("pair_r_0", "E z. r in z and 0 in z", "0"),
    ("pair_0_1", "E z. 0 in z and 1 in z", ""),
    ("exact_pair_0_1", "E z. A x. x in z <-> x = 0 or x = 1", ""),
    ("bounded_pairing", "A x in 2. A y in 2. E z. x in z and y in z", ""),
    ("singleton_r", "E s. A x. x in s <-> x = r", ""),
    ("successor_r", "E s. A x. x in s <-> x in r or x = r", "0"),
    ("union_r", "E u. A x in r. A y in x. y in u", "0"),
    ("union_2", "E u. A x in 2. A y in x. y in u", ""),
    ("exact_union_r", "E u. A y. y in u <-> (E x in r. y in x)", "0"),
    ("universal_set", "E v. A x. x in v", ""),
    ("foundation", "A x. (E y. y in x) -> (E y in x. A z in y. z notin x)", ""),
    ("transitive_hull_r", "E t. r in t and (A x in t. A y in x. y in t)", "0"),
    ("separation_1", "E s. A x. x in s <-> x in 1 and x != 0", ""),
]

UNIVERSE_COUNT = 5


def _random_sentences(count: int, height_max: int) -> list[Formula]:
    from .checks import random_formula

    rng = random.Random(RANDOM_FORMULA_SEED)
    out: list[Formula] = []
    while len(out) < count:
        phi = random_formula(rng, height_max, free=("r",), constants=(nat(0), nat(1)), leaf_bias=0.2)
        # structural filter only: at least one unbounded quantifier, height 3..5
        unbounded = any(type(s) in (Forall, Exists) for s in subformulas(phi))
        if phi.free - {"r"} or phi in out or not unbounded or not 3 <= height(phi) <= height_max:
            continue
        out.append(phi)
    return out


def _random_universes(count: int) -> list[Structure]:
    rng = random.Random(RANDOM_UNIVERSE_SEED)
    base = v_stage(4).carrier
    must = [nat(0), nat(1)]
    rest = [a for a in base if a not in must]
    out = []
    for _ in range(count):
        extra = rng.sample(rest, rng.randint(4, 10))
        out.append(Structure.of(must + extra))
    return out


def generate_corpus() -> str:
    """Text of the bundled corpus: every formula crossed with every universe."""
    formulas = [(name, text, r) for name, text, r in HAND_WRITTEN]
    for i, phi in enumerate(_random_sentences(10, 5)):
        formulas.append((f"random_{i}", render(phi, naturals=True), ""))
    universes = [(f"v{k}", f"rank:{k}") for k in (2, 3, 4)]
    for i, U in enumerate(_random_universes(UNIVERSE_COUNT)):
        universes.append((f"sub{i}", "inline:{" + ", ".join(_inline(a) for a in U.carrier) + "}"))
    lines = [
        "# Bundled dichotomy corpus: name | formula | k | r | universe",
        f"# {len(formulas)} formulas x {len(universes)} universes; random parts use seeds "
        f"{RANDOM_FORMULA_SEED} (formulas) and {RANDOM_UNIVERSE_SEED} (universes).",
        "# Regenerate with: python -m mlogic.corpus > src/mlogic/data/corpus.txt",
    ]
    for fname, text, r in formulas:
        lines.append(f"# {fname}")
        for uname, spec in universes:
            lines.append(f"{fname}@{uname} | {text} | 2 | {r} | {spec}")
    return "\n".join(lines) + "\n"


def _inline(a) -> str:
    from .hfset import render_set

    return render_set(a, naturals=True)


if __name__ == "__main__":
    print(generate_corpus(), end="")
