"""Command-line driver: single decisions, corpus runs and the self-check."""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import checks
from .corpus import (
    Case, CorpusError, bundled_corpus_path, load_corpus, parse_psi, parse_r, parse_universe,
)
from .deduction import (
    DEFAULT_DEPTH_BUDGET, DEFAULT_GUIDED_DEPTH, DEFAULT_NODE_BUDGET, CertificateFailure,
    DichotomyViolation, GuidanceFailed, Model, ProofTree, Refuted, decide, export_verdict,
)
from .formula import WrongArity, instantiate
from .hfset import StageTooLarge, Structure, extensional_witness, is_transitive, mostowski, render_set
from .parser import ParseError, parse_set
from .semantics import ORACLE_CEILING, Evaluator, SeedConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INCONCLUSIVE = 2
EXIT_FAILURE = 3

# Budget used by corpus mode unless --node-budget is given. Model cases always
# run the tree to its budget, so this sets most of the corpus runtime.
CORPUS_NODE_BUDGET = 20_000


class UsageError(ValueError):
    pass


@dataclass
class CaseResult:
    case: str
    verdict: str
    oracle: str
    tree_nodes: int | None
    model_size: int | None
    agreement: bool | None
    millis: int | None
    export: str
    summary: str
    message: str = ""

    def report(self) -> dict:
        out = {"case": self.case, "verdict": self.verdict, "oracle": self.oracle}
        if self.model_size is not None:
            out["model_size"] = self.model_size
        else:
            out["tree_nodes"] = self.tree_nodes
        out["agreement"] = self.agreement
        out["millis"] = self.millis
        return out


# --- validation of emitted artifacts ----------------------------------------


def revalidate_model_export(text: str) -> None:
    """Reload a Model export and check it from scratch; raises CertificateFailure."""
    doc = json.loads(text)
    man = doc["manifest"]
    psi = parse_psi(man["psi"])
    seeds = SeedConfig.from_naturals(man["seeds"]["k"], man["seeds"]["r"])
    model = Structure.of(parse_set(doc["model"]).elements)
    universe = Structure.of(parse_set(man["universe"]).elements)
    if not model.issubset(universe):
        raise CertificateFailure("reloaded model is not inside the universe")
    if not all(s in model for s in seeds.seed_set):
        raise CertificateFailure("reloaded model misses a seed")
    if extensional_witness(model) is not None:
        raise CertificateFailure("reloaded model is not extensional")
    if not Evaluator(model)(instantiate(psi, seeds.r)):
        raise CertificateFailure("reloaded model does not satisfy psi(r)")
    mapping, image = mostowski(model)
    if not is_transitive(image.carrier) or mapping[seeds.r] is not seeds.r:
        raise CertificateFailure("reloaded model has a bad collapse")
    if image.render(naturals=True) != doc["image"]:
        raise CertificateFailure("reloaded collapse image differs from the exported one")
    if any(c is not None for c in doc["branch"]["certificate"]):
        raise CertificateFailure("exported branch certificate is not all-false")


# --- running one case -------------------------------------------------------


@dataclass(frozen=True)
class Job:
    name: str
    formula: str
    k: int
    r: tuple[int, ...]
    universe: str
    node_budget: int
    depth_budget: int
    guided_depth: int
    timing: bool
    base: str | None = None


def _seeds(k: int, r: Sequence[int]) -> SeedConfig:
    bad = [j for j in r if j < 0 or j >= k]
    if bad:
        raise UsageError(f"r may only contain naturals below k={k}, got {bad[0]}")
    try:
        return SeedConfig.from_naturals(k, r)
    except ValueError as err:
        raise UsageError(str(err)) from None


def prepare(job: Job):
    """Parse and validate a job up front; raises UsageError."""
    try:
        psi = parse_psi(job.formula)
    except (ParseError, WrongArity) as err:
        raise UsageError(f"{job.name}: {err}") from None
    seeds = _seeds(job.k, job.r)
    try:
        M = parse_universe(job.universe, Path(job.base) if job.base else None)
    except (CorpusError, ParseError, StageTooLarge) as err:
        raise UsageError(f"{job.name}: {err}") from None
    missing = [s for s in seeds.seed_set if s not in M]
    if missing:
        raise UsageError(f"{job.name}: universe does not contain the seed {render_set(missing[0], True)}")
    return psi, seeds, M


def run_job(job: Job) -> CaseResult:
    psi, seeds, M = prepare(job)
    started = time.perf_counter()
    oracle = "skipped" if len(M) > ORACLE_CEILING else None
    try:
        verdict = decide(psi, seeds, M, job.node_budget, job.depth_budget, job.guided_depth)
    except DichotomyViolation as err:
        if oracle is None:
            oracle = "none" if err.oracle is None else "model"
        outcome = err.outcome
        doc = {
            "manifest": json.loads(export_verdict_stub(job, seeds, M)),
            "verdict": "dichotomy_violation",
            "oracle": None if err.oracle is None else err.oracle.render(naturals=True),
        }
        if isinstance(outcome, ProofTree):
            doc["tree_nodes"] = len(outcome)
            nodes = len(outcome)
        else:
            doc["budget"] = outcome.to_json()
            nodes = outcome.nodes
        text = json.dumps(doc, indent=1, ensure_ascii=False) + "\n"
        return CaseResult(job.name, "dichotomy_violation", oracle, nodes, None, False,
                          _millis(started, job.timing), text,
                          f"dichotomy violation: {err}", str(err))
    except (CertificateFailure, GuidanceFailed) as err:
        return CaseResult(job.name, "certificate_failure", oracle or "?", None, None, False,
                          _millis(started, job.timing), "", f"certificate failure: {err}", str(err))
    millis = _millis(started, job.timing)
    text = export_verdict(verdict, job.formula, seeds, M, job.node_budget, job.depth_budget, job.guided_depth)
    if isinstance(verdict, Model):
        try:
            revalidate_model_export(text)
        except CertificateFailure as err:
            return CaseResult(job.name, "certificate_failure", "model", None, len(verdict.model), False,
                              millis, text, f"certificate failure: {err}", str(err))
        summary = (f"model carrier {verdict.model.render(True)}; "
                   f"collapse image {verdict.image.render(True)}")
        return CaseResult(job.name, "model", oracle or "model", None, len(verdict.model), True,
                          millis, text, summary)
    if isinstance(verdict, Refuted):
        summary = (f"finite tree with {len(verdict.tree)} nodes, depth {verdict.tree.depth}; "
                   f"root formula {verdict.root_truth} is true")
        return CaseResult(job.name, "refuted", oracle or "none", len(verdict.tree), None, True,
                          millis, text, summary)
    summary = (f"inconclusive: {verdict.budget.nodes} nodes, frontier depth "
               f"{verdict.budget.frontier_depth} ({verdict.budget.reason})")
    return CaseResult(job.name, "inconclusive", oracle or "skipped", verdict.budget.nodes, None, None,
                      millis, text, summary)


def export_verdict_stub(job: Job, seeds: SeedConfig, M: Structure) -> str:
    from .deduction import _manifest

    return json.dumps(_manifest(job.formula, seeds, M, job.node_budget, job.depth_budget, job.guided_depth))


def _millis(started: float, timing: bool) -> int | None:
    return round((time.perf_counter() - started) * 1000) if timing else None


def _safe_name(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_.@" else "_" for c in name)


def exit_code(results: Sequence[CaseResult]) -> int:
    if any(r.verdict in ("dichotomy_violation", "certificate_failure") for r in results):
        return EXIT_FAILURE
    if any(r.verdict == "inconclusive" for r in results):
        return EXIT_INCONCLUSIVE
    return EXIT_OK


# --- modes ------------------------------------------------------------------


def _write(out: Path | None, name: str, text: str) -> None:
    if out is None:
        return
    path = out / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _report_text(results: Sequence[CaseResult]) -> str:
    return json.dumps([r.report() for r in results], indent=1) + "\n"


def single_summary(job: Job, result: CaseResult, M: Structure) -> str:
    lines = [
        f"formula: {job.formula}",
        f"seeds: k={job.k} r={{{', '.join(map(str, job.r))}}}",
        f"universe: {job.universe} ({len(M)} elements)",
        f"verdict: {result.verdict}",
        result.summary,
    ]
    return "\n".join(lines) + "\n"


def corpus_summary(results: Sequence[CaseResult], sizes: Sequence[int]) -> str:
    width = max([len("case")] + [len(r.case) for r in results])
    lines = [f"{'case':<{width}}  {'|M|':>3}  {'oracle':<7}  {'verdict':<19}  {'size':>6}  agree"]
    for r, n in zip(results, sizes):
        size = r.model_size if r.model_size is not None else r.tree_nodes
        agree = {True: "yes", False: "NO", None: "n/a"}[r.agreement]
        lines.append(f"{r.case:<{width}}  {n:>3}  {r.oracle:<7}  {r.verdict:<19}  "
                     f"{'' if size is None else size:>6}  {agree}")
    judged = [r for r in results if r.agreement is not None]
    agreed = sum(1 for r in judged if r.agreement)
    pct = 100.0 * agreed / len(judged) if judged else 100.0
    counts = {}
    for r in results:
        counts[r.verdict] = counts.get(r.verdict, 0) + 1
    lines.append("")
    lines.append(f"cases: {len(results)}; " + ", ".join(f"{k}: {v}" for k, v in sorted(counts.items())))
    lines.append(f"oracle/engine agreement: {agreed}/{len(judged)} ({pct:.1f}%)")
    return "\n".join(lines) + "\n"


def run_cases(jobs: Sequence[Job], workers: int) -> list[CaseResult]:
    """Run jobs, possibly in parallel; results come back in job order."""
    if workers <= 1 or len(jobs) <= 1:
        return [run_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_job, jobs, chunksize=1))


def selfcheck(seed: int = 0, mutate_label: bool = False) -> list[checks.SuiteResult]:
    """All property suites at their default sizes."""
    formulas = checks.default_formulas()
    small = [(psi, seeds, checks.v_stage(k)) for psi, seeds in formulas for k in (2, 3)]
    suites = [
        ("parser", lambda: checks.suite_parser(random.Random(seed), 200)),
        ("compatibility", lambda: checks.suite_compatibility(random.Random(seed + 1), formulas, 50, depth=8)),
        ("soundness+subformula", lambda: checks.suite_trees(small, 20_000, inject_mutation=mutate_label)),
        ("models", lambda: checks.suite_models(small, 50)),
        ("collapse", lambda: checks.suite_collapse(random.Random(seed + 2), 100)),
        ("wf agreement", lambda: checks.suite_wf(random.Random(seed + 3), 300)),
        ("product lift", lambda: checks.suite_product(random.Random(seed + 4), 100)),
    ]
    return checks.run_suites(suites)


def selfcheck_report(results: Sequence[checks.SuiteResult]) -> str:
    lines = []
    for res in results:
        lines.append(f"{res.name}: {'ok' if res.ok else f'FAILED ({len(res.failures)})'}")
        lines.extend(f"  {f}" for f in res.failures[:20])
    lines.append("selfcheck: " + ("all suites pass" if all(r.ok for r in results) else "failures"))
    return "\n".join(lines) + "\n"


# --- argument handling ------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mlogic", description=__doc__)
    src = p.add_mutually_exclusive_group()
    src.add_argument("-f", "--formula", help="formula text; its free variable, if any, stands for r")
    src.add_argument("--formula-file", type=Path, help="file holding the formula text")
    p.add_argument("--k", type=int, default=2, help="number of seed naturals 0..k-1 (default 2)")
    p.add_argument("--r", default="", help="comma-separated naturals below k forming r (empty for the empty set)")
    p.add_argument("--universe", default="rank:3", help="rank:N, inline:{...} or file:PATH (default rank:3)")
    p.add_argument("--node-budget", type=int, default=None,
                   help=f"tree node budget (default {DEFAULT_NODE_BUDGET}; {CORPUS_NODE_BUDGET} in corpus mode)")
    p.add_argument("--depth-budget", type=int, default=DEFAULT_DEPTH_BUDGET)
    p.add_argument("--guided-depth", type=int, default=DEFAULT_GUIDED_DEPTH)
    p.add_argument("--out", type=Path, default=None, help="directory for exports, summary and report")
    p.add_argument("--mode", choices=("single", "corpus", "selfcheck"), default="single")
    p.add_argument("--corpus", type=Path, default=None, help="corpus file (default: the bundled one)")
    p.add_argument("--jobs", type=int, default=None, help="worker processes for corpus mode (default: CPU count)")
    p.add_argument("--no-timing", action="store_true", help="write null millis so reports are byte-identical")
    p.add_argument("--seed", type=int, default=0, help="random seed for selfcheck")
    p.add_argument("--debug-mutate-label", action="store_true", help=argparse.SUPPRESS)
    return p


def _err(msg: str) -> None:
    print(f"mlogic: {msg}", file=sys.stderr)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return _dispatch(args)
    except UsageError as err:
        _err(str(err))
        return EXIT_USAGE


def _dispatch(args) -> int:
    for name in ("node_budget", "depth_budget", "guided_depth"):
        val = getattr(args, name)
        if val is not None and val < 0:
            raise UsageError(f"--{name.replace('_', '-')} must be non-negative")
    out: Path | None = args.out
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    if args.mode == "selfcheck":
        results = selfcheck(args.seed, args.debug_mutate_label)
        text = selfcheck_report(results)
        _write(out, "selfcheck.txt", text)
        sys.stdout.write(text)
        if not all(r.ok for r in results):
            _err("selfcheck failed")
            return EXIT_FAILURE
        return EXIT_OK

    timing = not args.no_timing
    if args.mode == "corpus":
        path = args.corpus or bundled_corpus_path()
        try:
            cases: list[Case] = load_corpus(path)
        except (OSError, CorpusError) as err:
            raise UsageError(str(err)) from None
        budget = CORPUS_NODE_BUDGET if args.node_budget is None else args.node_budget
        jobs = [Job(c.name, c.formula, c.k, c.r, c.universe, budget, args.depth_budget,
                    args.guided_depth, timing, str(Path(path).parent)) for c in cases]
        sizes = [len(prepare(j)[2]) for j in jobs]
        workers = args.jobs if args.jobs is not None else (os.cpu_count() or 1)
        results = run_cases(jobs, workers)
        for r in results:
            if r.export:
                _write(out, f"verdicts/{_safe_name(r.case)}.json", r.export)
            if r.message:
                _err(f"{r.case}: {r.message}")
        text = corpus_summary(results, sizes)
        _write(out, "summary.txt", text)
        _write(out, "report.json", _report_text(results))
        sys.stdout.write(text)
        return exit_code(results)

    if args.formula_file is not None:
        try:
            formula = args.formula_file.read_text(encoding="utf-8").strip()
        except OSError as err:
            raise UsageError(f"cannot read {args.formula_file}: {err.strerror}") from None
    elif args.formula is not None:
        formula = args.formula
    else:
        raise UsageError("single mode needs --formula or --formula-file")
    try:
        r = parse_r(args.r)
    except CorpusError as err:
        raise UsageError(str(err)) from None
    budget = DEFAULT_NODE_BUDGET if args.node_budget is None else args.node_budget
    job = Job("single", formula, args.k, r, args.universe, budget, args.depth_budget,
              args.guided_depth, timing)
    M = prepare(job)[2]
    result = run_job(job)
    if result.message:
        _err(result.message)
    text = single_summary(job, result, M)
    if result.export:
        _write(out, "verdict.json", result.export)
    _write(out, "summary.txt", text)
    _write(out, "report.json", _report_text([result]))
    sys.stdout.write(text)
    return exit_code([result])


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
