"""Command-line front end.

Data goes to stdout (or files named by --out); diagnostics go to stderr.
Exit codes: 0 success, 1 domain error (bad input, conflict, miss misuse),
2 file I/O error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import generate, hrr, superpose, tpr
from .errors import IoError, StructLangError
from .semantics import MISS, Miss, Structure, evaluate, print_value
from .syntax import Query, expr_to_dict, parse_text, print_expr
from .vectors import write_vectors_jsonl


def _eprint(*args) -> None:
    print(*args, file=sys.stderr)


def _gen_config(args: argparse.Namespace) -> generate.GenConfig:
    cfg = generate.GenConfig(seed=args.seed)
    if getattr(args, "num_pairs", None) is not None:
        cfg.num_pairs = args.num_pairs
    if getattr(args, "max_depth", None) is not None:
        cfg.max_nesting_depth = args.max_depth
        cfg.max_chained_queries = args.max_depth
    if getattr(args, "max_bindings", None) is not None:
        cfg.max_bindings_per_sum = args.max_bindings
    if getattr(args, "miss_frac", None) is not None:
        cfg.query_miss_fraction = args.miss_frac
    return cfg


def cmd_parse(args: argparse.Namespace) -> int:
    expr = parse_text(args.expr)
    print(json.dumps(expr_to_dict(expr)))
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    print(print_value(evaluate(parse_text(args.expr))))
    return 0


def cmd_gen(args: argparse.Namespace) -> int:
    cfg = _gen_config(args)
    pairs = generate.generate_dataset(cfg)
    out = Path(args.out)
    if args.split:
        out.mkdir(parents=True, exist_ok=True)
        by_split = generate.split_pairs(pairs)
        for name in generate.SPLITS:
            generate.write_jsonl(by_split[name], out / f"{name}.jsonl")
            _eprint(f"wrote {len(by_split[name])} pairs to {out / (name + '.jsonl')}")
    else:
        generate.write_jsonl(pairs, out)
        _eprint(f"wrote {len(pairs)} pairs to {out}")
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    pairs = generate.read_jsonl(args.data)
    mismatches = generate.verify_pairs(pairs)
    for index, expected, actual in mismatches:
        _eprint(f"pair {index}: target {expected!r} but evaluator says {actual!r}")
    print(f"checked {len(pairs)} pairs, {len(mismatches)} mismatches")
    if mismatches:
        raise StructLangError(f"{len(mismatches)} pairs disagree with the evaluator")
    return 0


def _read_exprs(path: str) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def _structures_for(exprs: list[str]) -> dict[str, Structure]:
    out: dict[str, Structure] = {}
    for text in exprs:
        value = evaluate(parse_text(text))
        if isinstance(value, Miss):
            raise StructLangError(f"expression evaluates to miss, nothing to encode: {text!r}")
        out[print_expr(parse_text(text))] = value
    return out


def _vocab_of(structures: dict[str, Structure]) -> tuple[list[str], list[str]]:
    symbols: set[str] = set()
    roles: set[str] = set()
    for s in structures.values():
        for path, sym in s.bindings.items():
            symbols.add(sym)
            roles.update(path)
    return sorted(symbols), sorted(roles)


def cmd_encode(args: argparse.Namespace) -> int:
    exprs = _read_exprs(args.exprs)
    structures = _structures_for(exprs)
    symbols, roles = _vocab_of(structures)
    if args.scheme == "tpr":
        cb = tpr.make_codebook(
            symbols, roles, args.sym_dim, args.role_dim, scheme="gaussian", seed=args.seed
        )
        max_depth = max((s.max_depth() for s in structures.values()), default=0)
        items = [
            (text, tpr.flatten_rep(tpr.tpr_encode(s, cb), cb, max_depth))
            for text, s in structures.items()
        ]
        if args.codebook:
            tpr.save_codebook(cb, args.codebook)
    else:
        cb = hrr.make_hrr_codebook(
            symbols, roles, args.hrr_dim, seed=args.seed, permute_mode=args.mode
        )
        items = [(text, hrr.hrr_encode(s, cb)) for text, s in structures.items()]
        if args.codebook:
            raise StructLangError("--codebook export is only available for --scheme tpr")
    write_vectors_jsonl(items, args.out)
    _eprint(f"wrote {len(items)} vectors to {args.out}")
    return 0


def cmd_query(args: argparse.Namespace) -> int:
    expr = parse_text(args.expr)
    chain: list[tuple[str, ...]] = []
    subject = expr
    while isinstance(subject, Query):
        chain.append(subject.path)
        subject = subject.subject
    chain.reverse()
    if not chain:
        raise StructLangError("expression has no query to run")

    oracle = evaluate(expr)
    subject_value = evaluate(subject)

    if isinstance(subject_value, Miss):
        decoded = MISS
    else:
        symbols = sorted({sym for sym in subject_value.bindings.values()})
        roles = sorted({r for path in subject_value.bindings for r in path})
        for path in chain:
            roles = sorted(set(roles) | set(path))
        depth = subject_value.max_depth()
        if args.scheme == "tpr":
            cb = tpr.make_codebook(
                symbols, roles, args.sym_dim, args.role_dim, scheme="gaussian", seed=args.seed
            )
            rep = tpr.tpr_encode(subject_value, cb)
            for path in chain:
                for role in reversed(path):
                    rep = tpr.tpr_unbind(rep, role, cb)
            decoded = tpr.tpr_decode(rep, cb, max_depth=depth)
        else:
            cb = hrr.make_hrr_codebook(
                symbols, roles, args.hrr_dim, seed=args.seed, permute_mode=args.mode
            )
            vec = hrr.hrr_encode(subject_value, cb)
            for path in chain:
                for role in reversed(path):
                    vec = hrr.hrr_unbind(vec, role, cb, args.unbind)
            decoded = hrr.hrr_decode(vec, cb, max_depth=depth, tau=args.tau)

    decoded_text = print_value(decoded)
    oracle_text = print_value(oracle)
    print(
        json.dumps(
            {"decoded": decoded_text, "oracle": oracle_text, "match": decoded_text == oracle_text}
        )
    )
    return 0


def _superpose_exprs(quads: list[superpose.Quadruple]) -> list[str]:
    exprs = superpose.quadruple_exprs(quads)
    singles: dict[str, None] = {}
    for text in exprs:
        left, right = superpose.binding_components(text)
        singles.setdefault(left, None)
        singles.setdefault(right, None)
    return exprs + [s for s in singles if s not in set(exprs)]


def cmd_superpose(args: argparse.Namespace) -> int:
    symbols = list(generate.DEFAULT_SYMBOLS)
    roles = list(generate.DEFAULT_ROLES)
    shared = superpose.gen_quadruples(
        superpose.KIND_SHARED, args.quadruples, symbols, roles, seed=args.seed
    )
    disjoint = superpose.gen_quadruples(
        superpose.KIND_DISJOINT, args.quadruples, symbols, roles, seed=args.seed
    )
    quads = shared + disjoint
    all_exprs = _superpose_exprs(quads)

    if args.emit_exprs:
        with open(args.emit_exprs, "w", encoding="utf-8") as fh:
            for text in all_exprs:
                fh.write(text + "\n")
        _eprint(f"wrote {len(all_exprs)} expressions to {args.emit_exprs}")
        return 0

    if args.source == "file":
        if not args.vectors:
            raise StructLangError("--source file needs --vectors")
        source = superpose.load_source(args.vectors)
    elif args.source == "tpr":
        structures = _structures_for(all_exprs)
        symbols_used, roles_used = _vocab_of(structures)
        cb = tpr.make_codebook(
            symbols_used, roles_used, args.sym_dim, args.role_dim,
            scheme="gaussian", seed=args.seed,
        )
        source = superpose.source_from_encoder(
            all_exprs, lambda s: tpr.flatten_rep(tpr.tpr_encode(s, cb), cb, 1), "tpr"
        )
    else:
        structures = _structures_for(all_exprs)
        symbols_used, roles_used = _vocab_of(structures)
        cb = hrr.make_hrr_codebook(
            symbols_used, roles_used, args.hrr_dim, seed=args.seed, permute_mode=args.mode
        )
        source = superpose.source_from_encoder(
            all_exprs, lambda s: hrr.hrr_encode(s, cb), "hrr"
        )

    shared_sample = superpose.norm_sample(shared, source, superpose.KIND_SHARED)
    disjoint_sample = superpose.norm_sample(disjoint, source, superpose.KIND_DISJOINT)

    extra = {}
    try:
        gaps = [superpose.additivity_gap(text, source) for text in superpose.quadruple_exprs(quads)]
        extra["mean_additivity_gap"] = float(np.mean(gaps))
    except superpose.MissingVector:
        extra["mean_additivity_gap"] = None  # single-binding vectors not supplied

    summary = superpose.report(shared_sample, disjoint_sample, args.out, extra)
    print(json.dumps(summary))
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    dims = [int(x) for x in args.dims.split(",") if x]
    modes = list(hrr.UNBIND_MODES) if args.unbind == "both" else [args.unbind]
    points = hrr.capacity_sweep(dims, modes, trials=args.trials, seed=args.seed)
    hrr.write_capacity_csv(points, args.out)
    for p in points:
        _eprint(
            f"n={p.n} mode={p.mode}: accuracy {p.accuracy:.3f}, mean cosine {p.mean_cosine:.3f}"
        )
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="structlang",
        description="role-binding expressions, vector embeddings, and analyses",
    )
    parser.add_argument("--config", help="JSON file of default flag values", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="print the AST of an expression as JSON")
    p.add_argument("expr")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("eval", help="evaluate an expression to its value text")
    p.add_argument("expr")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gen", help="generate a dataset of input/target pairs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--num-pairs", type=int, default=1000)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--max-bindings", type=int, default=None)
    p.add_argument("--miss-frac", type=float, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--split", action="store_true", help="write train/dev/test files into --out dir")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("check", help="re-evaluate a dataset and report mismatches")
    p.add_argument("--data", required=True)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("encode", help="embed expressions from a file, one per line")
    p.add_argument("--scheme", choices=("tpr", "hrr"), required=True)
    p.add_argument("--exprs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sym-dim", type=int, default=16)
    p.add_argument("--role-dim", type=int, default=16)
    p.add_argument("--hrr-dim", type=int, default=1024)
    p.add_argument("--mode", choices=hrr.PERMUTE_MODES, default="permuted")
    p.add_argument("--codebook", default=None, help="also export the codebook JSON here")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("query", help="run a query through vectors and compare to the oracle")
    p.add_argument("expr")
    p.add_argument("--scheme", choices=("tpr", "hrr"), default="tpr")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sym-dim", type=int, default=16)
    p.add_argument("--role-dim", type=int, default=16)
    p.add_argument("--hrr-dim", type=int, default=1024)
    p.add_argument("--mode", choices=hrr.PERMUTE_MODES, default="permuted")
    p.add_argument("--unbind", choices=hrr.UNBIND_MODES, default="correlation")
    p.add_argument("--tau", type=float, default=0.25)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("superpose", help="quadruple norm analysis and AUC report")
    p.add_argument("--source", choices=("tpr", "hrr", "file"), default="tpr")
    p.add_argument("--quadruples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="superpose_report")
    p.add_argument("--vectors", default=None, help="vectors JSONL for --source file")
    p.add_argument("--emit-exprs", default=None, help="write needed expressions here and stop")
    # defaults cover the full role alphabet; 16 would leave the role matrix
    # without a biorthogonal partner
    p.add_argument("--sym-dim", type=int, default=32)
    p.add_argument("--role-dim", type=int, default=32)
    p.add_argument("--hrr-dim", type=int, default=1024)
    p.add_argument("--mode", choices=hrr.PERMUTE_MODES, default="permuted")
    p.set_defaults(func=cmd_superpose)

    p = sub.add_parser("sweep", help="holographic capacity sweep to CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dims", default="256,512,1024,2048")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--unbind", choices=hrr.UNBIND_MODES + ("both",), default="both")
    p.set_defaults(func=cmd_sweep)

    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """--config JSON supplies defaults; explicit flags still win."""
    if "--config" not in argv:
        return argv
    at = argv.index("--config")
    if at + 1 >= len(argv):
        raise StructLangError("--config needs a path")
    path = argv[at + 1]
    try:
        with open(path, "r", encoding="utf-8") as fh:
            overrides = json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(overrides, dict):
        raise StructLangError("config must be a JSON object of flag defaults")
    subparsers = parser._subparsers._group_actions[0].choices  # type: ignore[union-attr]
    known = set()
    for sp in subparsers.values():
        known.update(a.dest for a in sp._actions)
    unknown = set(overrides) - known
    if unknown:
        raise StructLangError(f"unknown config keys: {sorted(unknown)}")
    for sp in subparsers.values():
        dests = {a.dest for a in sp._actions}
        sp.set_defaults(**{k: v for k, v in overrides.items() if k in dests})
    return argv[:at] + argv[at + 2 :]


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        argv = _apply_config(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except IoError as exc:
        _eprint(f"error: {exc}")
        return 2
    except StructLangError as exc:
        _eprint(f"error: {exc}")
        return 1
    except OSError as exc:
        _eprint(f"error: {exc}")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
