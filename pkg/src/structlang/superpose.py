"""Superposition arithmetic over expression embeddings.

The probe is a quadruple of two-binding expressions e1..e4 and the vector

    lhs = [v(e1) - v(e2)] - [v(e3) - v(e4)].

"Shared" quadruples repeat their second bindings across the pairs, so any
additive embedding cancels and ||lhs|| is (numerically) zero.  "Disjoint"
quadruples give e3/e4 fresh tokens, so nothing cancels.  Separation of
the two norm populations is scored with AUC; additivity itself is probed
directly by additivity_gap.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import IoError, StructLangError
from .generate import rng_substream
from .semantics import Structure, evaluate
from .syntax import Bind, Sum, Sym, parse_text, print_expr
from .vectors import read_vectors_jsonl

KIND_SHARED = "shared"
KIND_DISJOINT = "disjoint"

_EXACT_AUC_LIMIT = 10_000_000


class VocabTooSmall(StructLangError):
    def __init__(self, what: str, needed: int, have: int):
        super().__init__(f"need at least {needed} distinct {what}, have {have}")


class MissingVector(StructLangError):
    def __init__(self, expr: str):
        self.expr = expr
        super().__init__(f"no vector for expression: {expr!r}")


class EmptySample(StructLangError):
    def __init__(self) -> None:
        super().__init__("AUC needs at least one norm on each side")


@dataclass(frozen=True)
class Quadruple:
    e1: str
    e2: str
    e3: str
    e4: str
    kind: str


@dataclass
class NormSample:
    kind: str
    norms: list[float]


@dataclass
class VectorSource:
    lookup: dict[str, np.ndarray]
    origin: str  # "tpr" | "hrr" | "imported"
    dim: int

    def get(self, expr: str) -> np.ndarray:
        vec = self.lookup.get(expr)
        if vec is None:
            raise MissingVector(expr)
        return vec


def _two_binding_text(s1: str, r1: str, s2: str, r2: str) -> str:
    return f"{s1}:{r1} + {s2}:{r2}"


def gen_quadruples(
    kind: str,
    count: int,
    symbols: Sequence[str],
    roles: Sequence[str],
    seed: int = 0,
) -> list[Quadruple]:
    """Seeded quadruples; all tokens named in one quadruple are distinct."""
    if kind not in (KIND_SHARED, KIND_DISJOINT):
        raise StructLangError(f"unknown quadruple kind: {kind!r}")
    need = 4 if kind == KIND_SHARED else 6
    if len(set(symbols)) < need:
        raise VocabTooSmall("symbols", need, len(set(symbols)))
    if len(set(roles)) < need:
        raise VocabTooSmall("roles", need, len(set(roles)))
    quads = []
    for i in range(count):
        rng = rng_substream(seed, "quadruple", kind, i)
        syms = rng.sample(list(symbols), need)
        rols = rng.sample(list(roles), need)
        if kind == KIND_SHARED:
            sa, sb, sc, sd = syms[:4]
            ra, rb, rc, rd = rols[:4]
            quads.append(
                Quadruple(
                    _two_binding_text(sa, ra, sb, rb),
                    _two_binding_text(sa, ra, sc, rc),
                    _two_binding_text(sd, rd, sb, rb),
                    _two_binding_text(sd, rd, sc, rc),
                    KIND_SHARED,
                )
            )
        else:
            sa, sb, sc, sx, su, sv = syms
            ra, rb, rc, rx, ru, rv = rols
            quads.append(
                Quadruple(
                    _two_binding_text(sa, ra, sb, rb),
                    _two_binding_text(sa, ra, sc, rc),
                    _two_binding_text(sx, rx, su, ru),
                    _two_binding_text(sx, rx, sv, rv),
                    KIND_DISJOINT,
                )
            )
    return quads


def king_queen_quadruple() -> Quadruple:
    """Gender/status analogy preset: two roles, two fillers each."""
    return Quadruple(
        "mm:G + rr:S",
        "mm:G + cc:S",
        "ff:G + rr:S",
        "ff:G + cc:S",
        KIND_SHARED,
    )


def quadruple_exprs(quads: Sequence[Quadruple]) -> list[str]:
    """Unique expressions across quadruples, first-seen order."""
    seen: dict[str, None] = {}
    for q in quads:
        for expr in (q.e1, q.e2, q.e3, q.e4):
            seen.setdefault(expr, None)
    return list(seen)


def binding_components(expr_text: str) -> tuple[str, str]:
    """Split a two-binding sum into its single-binding parts."""
    e = parse_text(expr_text)
    if not (
        isinstance(e, Sum)
        and isinstance(e.left, Bind)
        and isinstance(e.right, Bind)
        and isinstance(e.left.child, Sym)
        and isinstance(e.right.child, Sym)
    ):
        raise StructLangError(
            f"expected a sum of two single bindings, got {expr_text!r}"
        )
    return print_expr(e.left), print_expr(e.right)


def source_from_encoder(
    exprs: Sequence[str], encoder: Callable[[Structure], np.ndarray], origin: str
) -> VectorSource:
    """Evaluate each expression and embed its structure."""
    lookup: dict[str, np.ndarray] = {}
    for text in exprs:
        value = evaluate(parse_text(text))
        if not isinstance(value, Structure):
            raise StructLangError(f"expression has no structure to embed: {text!r}")
        lookup[print_expr(parse_text(text))] = np.asarray(encoder(value), dtype=float)
    dims = {v.shape[0] for v in lookup.values()}
    if len(dims) > 1:
        raise StructLangError(f"inconsistent vector dimensions: {sorted(dims)}")
    return VectorSource(lookup, origin, dims.pop() if dims else 0)


def load_source(path: str | Path) -> VectorSource:
    lookup = read_vectors_jsonl(path)
    dims = {v.shape[0] for v in lookup.values()}
    if len(dims) > 1:
        raise StructLangError(f"inconsistent vector dimensions in {path}: {sorted(dims)}")
    return VectorSource(lookup, "imported", dims.pop() if dims else 0)


def lhs_norm(quad: Quadruple, source: VectorSource) -> float:
    v1 = source.get(quad.e1)
    v2 = source.get(quad.e2)
    v3 = source.get(quad.e3)
    v4 = source.get(quad.e4)
    return float(np.linalg.norm((v1 - v2) - (v3 - v4)))


def norm_sample(quads: Sequence[Quadruple], source: VectorSource, kind: str) -> NormSample:
    return NormSample(kind, [lhs_norm(q, source) for q in quads])


def additivity_gap(expr_text: str, source: VectorSource) -> float:
    """|| v(p + q) - (v(p) + v(q)) || for a two-binding sum."""
    left, right = binding_components(expr_text)
    whole = source.get(print_expr(parse_text(expr_text)))
    return float(np.linalg.norm(whole - (source.get(left) + source.get(right))))


# --- AUC ---------------------------------------------------------------
# Both routes count concordant pairs in exact half-units, so their results
# are identical floats, not merely close.


def _norms(sample: "NormSample | Sequence[float]") -> np.ndarray:
    values = sample.norms if isinstance(sample, NormSample) else sample
    return np.asarray(list(values), dtype=float)


def auc_pairwise(shared, disjoint) -> float:
    """Exhaustive pair counting: P(shared < disjoint) + 0.5 P(equal)."""
    a = _norms(shared)
    b = _norms(disjoint)
    if a.size == 0 or b.size == 0:
        raise EmptySample()
    less = int(np.sum(a[:, None] < b[None, :]))
    equal = int(np.sum(a[:, None] == b[None, :]))
    return (2 * less + equal) / (2 * a.size * b.size)


def auc_ranksum(shared, disjoint) -> float:
    """Rank-sum route with midranks for ties; equals auc_pairwise exactly."""
    a = _norms(shared)
    b = _norms(disjoint)
    if a.size == 0 or b.size == 0:
        raise EmptySample()
    pooled = np.concatenate([a, b])
    order = np.argsort(pooled, kind="stable")
    ranks2 = np.empty(pooled.size, dtype=np.int64)  # 2x midranks, exact ints
    i = 0
    while i < pooled.size:
        j = i
        while j + 1 < pooled.size and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        # 1-based tied block [i, j]: midrank = (i + j) / 2 + 1
        ranks2[order[i : j + 1]] = i + j + 2
        i = j + 1
    r2_b = int(np.sum(ranks2[a.size :]))
    u2 = r2_b - b.size * (b.size + 1)  # 2x the Mann-Whitney U of the disjoint side
    return u2 / (2 * a.size * b.size)


def auc(shared, disjoint) -> float:
    """Area under the ROC for separating the two norm populations.

    Exhaustive counting up to 1e7 pairs, rank-sum beyond.
    """
    a = _norms(shared)
    b = _norms(disjoint)
    if a.size == 0 or b.size == 0:
        raise EmptySample()
    if a.size * b.size <= _EXACT_AUC_LIMIT:
        return auc_pairwise(a, b)
    return auc_ranksum(a, b)


# --- report ------------------------------------------------------------

_HIST_BINS = 50


def report(
    shared: NormSample,
    disjoint: NormSample,
    out_dir: str | Path,
    extra_summary: dict | None = None,
) -> dict:
    """Write norms.csv, hist.csv, and summary.json; returns the summary."""
    if not shared.norms or not disjoint.norms:
        raise EmptySample()
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)

        with open(out / "norms.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["kind", "norm"])
            for sample in (shared, disjoint):
                for norm in sample.norms:
                    writer.writerow([sample.kind, repr(norm)])

        pooled = np.asarray(shared.norms + disjoint.norms, dtype=float)
        lo = float(pooled.min())
        hi = float(pooled.max())
        if hi == lo:
            hi = lo + 1.0
        edges = np.linspace(lo, hi, _HIST_BINS + 1)
        count_shared, _ = np.histogram(shared.norms, bins=edges)
        count_disjoint, _ = np.histogram(disjoint.norms, bins=edges)
        with open(out / "hist.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bin_lo", "bin_hi", "count_shared", "count_disjoint"])
            for k in range(_HIST_BINS):
                writer.writerow(
                    [edges[k], edges[k + 1], int(count_shared[k]), int(count_disjoint[k])]
                )

        summary = {
            "auc": auc(shared, disjoint),
            "n_shared": len(shared.norms),
            "n_disjoint": len(disjoint.norms),
            "mean_shared": float(np.mean(shared.norms)),
            "median_shared": float(np.median(shared.norms)),
            "mean_disjoint": float(np.mean(disjoint.norms)),
            "median_disjoint": float(np.median(disjoint.norms)),
        }
        if extra_summary:
            summary.update(extra_summary)
        with open(out / "summary.json", "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write report to {out_dir}: {exc}") from exc
    return summary
