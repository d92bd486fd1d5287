"""Command-line front end.

Exit codes: 0 pass, 1 verification failure, 2 input error, 3 round budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import secrets
import sys
from fractions import Fraction

from . import linalg
from .batch import OutcomeBatch, race_batch
from .generic import PerturbationError, uniform_vertex_batch, build_factory, build_generic
from .ksubset import KSubsetSpec, ksubset_batch, sampford_factory
from .linalg import format_rational, parse_rational
from .matching import matching_batch, matching_factory
from .polytope import RankError, enumerate_vertices, is_generic, row_reduce
from .randomness import make_sources
from .serialize import load_json_arg, parse_point, problem_from_json, spec_from_json, spec_to_json
from .verifier import exact_distribution, stat_check, verify_identity, zonotope_identity_check

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3
DEFAULT_BUDGET = 1_000_000


def _seed(args) -> int:
    if args.seed is None:
        args.seed = secrets.randbits(63)
        print(f"seed: {args.seed}", file=sys.stderr)
    return args.seed


def _emit(obj, fmt: str = "json") -> None:
    if fmt == "tsv" and hasattr(obj, "to_tsv"):
        print(obj.to_tsv())
    else:
        print(json.dumps(obj.to_json() if hasattr(obj, "to_json") else obj, indent=2))


def _vec(v) -> str:
    return ",".join(format_rational(c) for c in v)


def _budget(args) -> int | None:
    return None if args.round_budget == 0 else args.round_budget


def _outcome_tsv(batch: OutcomeBatch) -> str:
    lines = ["sample\tvertex\trounds\tflips"]
    for s, (v, r, f) in enumerate(zip(batch.vertices, batch.rounds, batch.flips)):
        lines.append(f"{s}\t{'EXHAUSTED' if v is None else _vec(v)}\t{r}\t{f}")
    done = len(batch) - batch.exhausted
    mean_flips = float(batch.flips.mean()) if len(batch) else 0.0
    lines.append(f"# samples={len(batch)} completed={done} exhausted={batch.exhausted} mean_flips={mean_flips:.3f}")
    return "\n".join(lines)


def _exact(weights, x):
    """Exact vertex frequencies, or ``None`` where every weight vanishes."""
    try:
        return exact_distribution(weights, x)
    except ZeroDivisionError:
        return None


def _finish_stats(batch: OutcomeBatch, x, exact, fmt: str, outcomes: bool) -> int:
    if outcomes:
        print(_outcome_tsv(batch))
        return EXIT_BUDGET if batch.exhausted else EXIT_OK
    report = stat_check(batch.vertices, batch.flips, x, exact)
    _emit(report, fmt)
    if batch.exhausted:
        return EXIT_BUDGET
    return EXIT_OK if report.passed() else EXIT_FAIL


# -- subcommands ----------------------------------------------------------------------------


def cmd_vertices(args) -> int:
    prob = problem_from_json(load_json_arg(args.problem))
    h = prob.subspace()
    verts = enumerate_vertices(h)
    _emit({"generic": is_generic(h), "count": len(verts), "vertices": [[format_rational(c) for c in v] for v in verts]})
    return EXIT_OK


def cmd_row_reduce(args) -> int:
    prob = problem_from_json(load_json_arg(args.problem))
    h = row_reduce(prob.w, prob.b)
    prob.w, prob.b = h.w, h.b
    _emit(prob.to_json())
    return EXIT_OK


def cmd_build(args) -> int:
    prob = problem_from_json(load_json_arg(args.problem))
    h = prob.subspace()
    _, ext = make_sources([], _seed(args))
    try:
        spec = build_factory(h, parse_rational(args.perturb_radius), ext, args.max_attempts)
    except PerturbationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for b_t, why in exc.attempts:
            print(f"  b_t=[{_vec(b_t)}]: {why}", file=sys.stderr)
        return EXIT_FAIL
    text = json.dumps(spec_to_json(spec), indent=2)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def _spec_and_point(args):
    spec = spec_from_json(load_json_arg(args.factory))
    x = parse_point(load_json_arg(args.x))
    if not spec.subspace.contains(x):
        raise ValueError("hidden point is not in the factory's polytope")
    return spec, x


def _run_spec(spec, x, args) -> OutcomeBatch:
    coins, ext = make_sources(x, _seed(args))
    if args.sampler == "uniform-vertex":
        if spec.provenance.get("kind") != "generic":
            raise ValueError("the uniform-vertex sampler needs a generic factory")
        return uniform_vertex_batch(spec.subspace, coins, ext, args.n_samples, _budget(args))
    return race_batch(spec.weights, coins, ext, args.n_samples, _budget(args))


def cmd_sample(args) -> int:
    spec, x = _spec_and_point(args)
    batch = _run_spec(spec, x, args)
    print(_outcome_tsv(batch))
    return EXIT_BUDGET if batch.exhausted else EXIT_OK


def cmd_stats(args) -> int:
    spec, x = _spec_and_point(args)
    batch = _run_spec(spec, x, args)
    return _finish_stats(batch, x, _exact(spec.weights, x), args.format, False)


def cmd_verify(args) -> int:
    spec = spec_from_json(load_json_arg(args.factory))
    _, ext = make_sources([], _seed(args))
    report = verify_identity(spec, args.points, ext)
    _emit(report, args.format)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_matching(args) -> int:
    x = parse_point(load_json_arg(args.x))
    n = args.n
    if len(x) != n * n:
        raise ValueError(f"expected an {n}x{n} matrix")
    rows = [x[i * n:(i + 1) * n] for i in range(n)]
    if any(sum(r) != 1 for r in rows) or any(sum(r[j] for r in rows) != 1 for j in range(n)):
        raise ValueError("x is not doubly stochastic")
    coins, ext = make_sources(x, _seed(args))
    batch = matching_batch(n, coins, ext, args.n_samples, _budget(args))
    exact = _exact(matching_factory(n).weights, x) if n <= 5 else None
    return _finish_stats(batch, x, exact, args.format, args.outcomes)


def cmd_ksubset(args) -> int:
    alpha = parse_rational(args.alpha) if args.alpha is not None else Fraction(args.k)
    ks = KSubsetSpec(args.n, alpha)
    x = parse_point(load_json_arg(args.x))
    if len(x) != ks.n or sum(x) != ks.alpha or not all(0 <= c <= 1 for c in x):
        raise ValueError("x must lie in [0,1]^n with coordinates summing to alpha")
    coins, ext = make_sources(x, _seed(args))
    batch = ksubset_batch(ks, coins, ext, args.n_samples, args.variant, _budget(args))
    spec = sampford_factory(ks, args.variant) if ks.integral else build_generic(ks.subspace())
    return _finish_stats(batch, x, _exact(spec.weights, x), args.format, args.outcomes)


def cmd_zonotope(args) -> int:
    prob = problem_from_json(load_json_arg(args.problem))
    s_prime = [int(t) for t in args.sprime.split(",") if t.strip()]
    _, ext = make_sources([], _seed(args))
    report = zonotope_identity_check(prob.w, s_prime, args.j, args.points, ext)
    _emit(report)
    return EXIT_OK if report.passed else EXIT_FAIL


# -- parser ----------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polyfactory", description="Exact coin-flip vertex sampling for polytopes.")
    sub = ap.add_subparsers(dest="command", required=True)

    def seeded(p):
        p.add_argument("--seed", type=int, default=None, help="64-bit seed; OS entropy if omitted")
        return p

    def sampling(p):
        seeded(p)
        p.add_argument("--n-samples", type=int, default=10_000)
        p.add_argument("--round-budget", type=int, default=DEFAULT_BUDGET, help="0 disables the budget")
        p.add_argument("--format", choices=("json", "tsv"), default="json")
        return p

    p = sub.add_parser("vertices", help="list the polytope's vertices")
    p.add_argument("problem")
    p.set_defaults(func=cmd_vertices)

    p = sub.add_parser("row-reduce", help="keep an independent row subset of (W|b)")
    p.add_argument("problem")
    p.set_defaults(func=cmd_row_reduce)

    p = seeded(sub.add_parser("build", help="build factory weights (perturbs when non-generic)"))
    p.add_argument("problem")
    p.add_argument("--perturb-radius", default="1/1048576")
    p.add_argument("--max-attempts", type=int, default=8)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_build)

    for name, func, helptext in (
        ("sample", cmd_sample, "draw vertices from a factory"),
        ("stats", cmd_stats, "marginal and frequency checks for a factory"),
    ):
        p = sampling(sub.add_parser(name, help=helptext))
        p.add_argument("factory")
        p.add_argument("--x", required=True, help="hidden point (file or JSON literal)")
        p.add_argument("--sampler", choices=("race", "uniform-vertex"), default="race")
        p.set_defaults(func=func)

    p = seeded(sub.add_parser("verify", help="exact identity check of a factory"))
    p.add_argument("factory")
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--format", choices=("json", "tsv"), default="json")
    p.set_defaults(func=cmd_verify)

    p = sampling(sub.add_parser("matching", help="sample perfect matchings from a doubly stochastic matrix"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--outcomes", action="store_true", help="print every outcome instead of the report")
    p.set_defaults(func=cmd_matching)

    p = sampling(sub.add_parser("ksubset", help="sample from {x in [0,1]^n : sum x = alpha}"))
    p.add_argument("--n", type=int, required=True)
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--k", type=int)
    grp.add_argument("--alpha")
    p.add_argument("--variant", choices=("minus", "plus", "v1", "v2"), default=None)
    p.add_argument("--x", required=True)
    p.add_argument("--outcomes", action="store_true")
    p.set_defaults(func=cmd_ksubset)

    p = seeded(sub.add_parser("zonotope-check", help="signed tiling check for columns S' and j"))
    p.add_argument("problem")
    p.add_argument("--sprime", required=True, help="comma-separated 0-based column indices")
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--points", type=int, default=200)
    p.set_defaults(func=cmd_zonotope)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "ksubset" and args.variant is None:
        args.variant = "minus" if args.k is not None or parse_rational(args.alpha).denominator == 1 else "v2"
    try:
        return args.func(args)
    except (ValueError, KeyError, TypeError, RankError, linalg.DimensionError, linalg.SingularMatrixError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
