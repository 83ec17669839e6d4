"""Seeded generation of expression/value pairs for training and testing.

Five pair categories, named after the expression shape they produce:

  binding            sum of bindings, no query
  unbind             sum plus one query that hits
  unbind_miss        sum plus one query that misses
  bind_unbind_rebind flat sum, query one role, rebind the answer
  nested_unbind      nested sum peeled by a chain of single-role queries

Every pair is produced from an rng substream keyed by (seed, index,
attempt), so regeneration is byte-identical and indices are independent.
Sums are built constructively from suffix-free path sets; everything else
is rejection-sampled against the evaluator.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import random
import string
from dataclasses import dataclass, field
from pathlib import Path

from .errors import StructLangError
from .semantics import Miss, Structure, evaluate, print_value
from .syntax import Bind, Expr, Query, RolePath, Sum, Sym, parse_text, print_expr

PAIR_TYPES = ("binding", "unbind", "unbind_miss", "bind_unbind_rebind", "nested_unbind")

DEFAULT_SYMBOLS = tuple(
    a + b for a, b in itertools.product(string.ascii_lowercase, repeat=2)
)
DEFAULT_ROLES = tuple(string.ascii_uppercase)

SPLITS = ("train", "dev", "test")

_MAX_ATTEMPTS = 1000


class GenExhausted(StructLangError):
    def __init__(self, index: int, pair_type: str):
        super().__init__(
            f"gave up generating pair {index} ({pair_type}) after "
            f"{_MAX_ATTEMPTS} consecutive failures; config too restrictive"
        )


class BadConfig(StructLangError):
    pass


@dataclass
class GenConfig:
    seed: int = 0
    num_pairs: int = 1000
    max_bindings_per_sum: int = 4
    max_nesting_depth: int = 4
    max_chained_queries: int = 4
    query_miss_fraction: float = 0.1
    type_mix: dict[str, float] = field(
        default_factory=lambda: {t: 1.0 for t in PAIR_TYPES}
    )
    symbol_vocab: tuple[str, ...] = DEFAULT_SYMBOLS
    role_vocab: tuple[str, ...] = DEFAULT_ROLES

    def validate(self) -> None:
        if self.num_pairs < 0:
            raise BadConfig("num_pairs must be >= 0")
        if self.max_bindings_per_sum < 1:
            raise BadConfig("max_bindings_per_sum must be >= 1")
        if self.max_nesting_depth < 1:
            raise BadConfig("max_nesting_depth must be >= 1")
        if self.max_chained_queries < 1:
            raise BadConfig("max_chained_queries must be >= 1")
        if not 0.0 <= self.query_miss_fraction <= 1.0:
            raise BadConfig("query_miss_fraction must be in [0, 1]")
        if not self.symbol_vocab or not self.role_vocab:
            raise BadConfig("symbol and role vocabularies must be non-empty")
        unknown = set(self.type_mix) - set(PAIR_TYPES)
        if unknown:
            raise BadConfig(f"unknown pair types in type_mix: {sorted(unknown)}")
        if any(w < 0 for w in self.type_mix.values()):
            raise BadConfig("type_mix weights must be non-negative")
        if not any(w > 0 for w in self.type_mix.values()):
            raise BadConfig("type_mix must have at least one positive weight")


@dataclass(frozen=True)
class DataPair:
    input: str
    target: str
    type: str


def rng_substream(seed: int, *key) -> random.Random:
    """Independent rng stream for (seed, key); stable across runs, unlike hash()."""
    digest = hashlib.blake2b(repr((seed,) + key).encode(), digest_size=8).digest()
    return random.Random(int.from_bytes(digest, "big"))


def suffix_related(a: RolePath, b: RolePath) -> bool:
    shorter, longer = (a, b) if len(a) <= len(b) else (b, a)
    return longer[len(longer) - len(shorter) :] == shorter


def sample_suffix_free_paths(
    rng: random.Random,
    roles: tuple[str, ...],
    count: int,
    max_depth: int,
) -> list[RolePath] | None:
    """Sample `count` distinct pairwise suffix-free paths, or None if stuck."""
    paths: list[RolePath] = []
    misses = 0
    while len(paths) < count:
        depth = rng.randint(1, max_depth)
        candidate = tuple(rng.choice(roles) for _ in range(depth))
        if any(suffix_related(candidate, p) for p in paths):
            misses += 1
            if misses > 200:
                return None
            continue
        paths.append(candidate)
    return paths


def _bind_chain(sym: str, path: RolePath) -> Expr:
    node: Expr = Sym(sym)
    for role in path:
        node = Bind(node, role)
    return node


def _sum_of(terms: list[Expr]) -> Expr:
    node = terms[0]
    for term in terms[1:]:
        node = Sum(node, term)
    return node


def _random_sum(cfg: GenConfig, rng: random.Random, max_bindings: int) -> Expr | None:
    count = rng.randint(1, max_bindings)
    paths = sample_suffix_free_paths(rng, cfg.role_vocab, count, cfg.max_nesting_depth)
    if paths is None:
        return None
    terms = [_bind_chain(rng.choice(cfg.symbol_vocab), p) for p in paths]
    return _sum_of(terms)


def _structure_paths(e: Expr) -> list[RolePath]:
    v = evaluate(e)
    assert isinstance(v, Structure)
    return list(v.bindings)


def _fresh_role(rng: random.Random, vocab: tuple[str, ...], used: set[str]) -> str | None:
    free = [r for r in vocab if r not in used]
    if not free:
        return None
    return rng.choice(free)


def _build_binding(cfg: GenConfig, rng: random.Random) -> Expr | None:
    return _random_sum(cfg, rng, cfg.max_bindings_per_sum)


def _build_unbind(cfg: GenConfig, rng: random.Random) -> Expr | None:
    base = _random_sum(cfg, rng, cfg.max_bindings_per_sum)
    if base is None:
        return None
    target = rng.choice(_structure_paths(base))
    # a query path that is a suffix of a bound path always hits
    length = rng.randint(1, len(target))
    return Query(base, target[len(target) - length :])


def _build_unbind_miss(cfg: GenConfig, rng: random.Random) -> Expr | None:
    base = _random_sum(cfg, rng, cfg.max_bindings_per_sum)
    if base is None:
        return None
    outermost = {p[-1] for p in _structure_paths(base)}
    probe = _fresh_role(rng, cfg.role_vocab, outermost)
    if probe is None:
        return None
    return Query(base, (probe,))


def _build_bind_unbind_rebind(cfg: GenConfig, rng: random.Random) -> Expr | None:
    count = rng.randint(1, min(cfg.max_bindings_per_sum, len(cfg.role_vocab)))
    roles = rng.sample(cfg.role_vocab, count)
    terms = [_bind_chain(rng.choice(cfg.symbol_vocab), (r,)) for r in roles]
    if rng.random() < cfg.query_miss_fraction:
        probe = _fresh_role(rng, cfg.role_vocab, set(roles))
        if probe is None:
            return None
    else:
        probe = rng.choice(roles)
    rebind = rng.choice(cfg.role_vocab)
    return Bind(Query(_sum_of(terms), (probe,)), rebind)


def _build_nested_unbind(cfg: GenConfig, rng: random.Random) -> Expr | None:
    count = rng.randint(1, min(cfg.max_bindings_per_sum, len(cfg.role_vocab)))
    roles = rng.sample(cfg.role_vocab, count)
    base = _sum_of([_bind_chain(rng.choice(cfg.symbol_vocab), (r,)) for r in roles])
    wraps = rng.randint(1, min(cfg.max_nesting_depth, cfg.max_chained_queries))
    node: Expr = base
    wrap_roles = []
    for _ in range(wraps):
        role = rng.choice(cfg.role_vocab)
        wrap_roles.append(role)
        node = Bind(node, role)
    # peel every wrap, outermost-first, one single-role query at a time
    chain = list(reversed(wrap_roles))
    if rng.random() < cfg.query_miss_fraction:
        spot = rng.randrange(len(chain))
        wrong = _fresh_role(rng, cfg.role_vocab, {chain[spot]})
        if wrong is None:
            return None
        chain[spot] = wrong
    for role in chain:
        node = Query(node, (role,))
    return node


_BUILDERS = {
    "binding": _build_binding,
    "unbind": _build_unbind,
    "unbind_miss": _build_unbind_miss,
    "bind_unbind_rebind": _build_bind_unbind_rebind,
    "nested_unbind": _build_nested_unbind,
}


def _category_ok(pair_type: str, value) -> bool:
    if pair_type == "unbind":
        return isinstance(value, Structure)
    if pair_type == "unbind_miss":
        return isinstance(value, Miss)
    return True


def sample_expr(cfg: GenConfig, rng: random.Random, pair_type: str | None = None) -> Expr:
    """One expression of the given (or mix-drawn) category; evaluates cleanly."""
    if pair_type is None:
        names = [t for t in PAIR_TYPES if cfg.type_mix.get(t, 0.0) > 0]
        weights = [cfg.type_mix[t] for t in names]
        pair_type = rng.choices(names, weights=weights, k=1)[0]
    for _ in range(_MAX_ATTEMPTS):
        expr = _BUILDERS[pair_type](cfg, rng)
        if expr is None:
            continue
        value = evaluate(expr)
        if _category_ok(pair_type, value):
            return expr
    raise GenExhausted(-1, pair_type)


def _allocate_types(cfg: GenConfig) -> list[str]:
    """Exact largest-remainder allocation of categories, then a seeded shuffle."""
    names = [t for t in PAIR_TYPES if cfg.type_mix.get(t, 0.0) > 0]
    weights = [cfg.type_mix[t] for t in names]
    total = sum(weights)
    raw = [cfg.num_pairs * w / total for w in weights]
    counts = [int(x) for x in raw]
    shortfall = cfg.num_pairs - sum(counts)
    by_remainder = sorted(range(len(names)), key=lambda i: raw[i] - counts[i], reverse=True)
    for i in by_remainder[:shortfall]:
        counts[i] += 1
    labels = [name for name, n in zip(names, counts) for _ in range(n)]
    rng_substream(cfg.seed, "type-allocation").shuffle(labels)
    return labels


def generate_dataset(cfg: GenConfig) -> list[DataPair]:
    """Exactly cfg.num_pairs oracle-consistent pairs, deduplicated on input."""
    cfg.validate()
    labels = _allocate_types(cfg)
    seen: set[str] = set()
    pairs: list[DataPair] = []
    for index in range(cfg.num_pairs):
        pair_type = labels[index]
        for attempt in range(_MAX_ATTEMPTS):
            rng = rng_substream(cfg.seed, index, attempt)
            expr = _BUILDERS[pair_type](cfg, rng)
            if expr is None:
                continue
            value = evaluate(expr)
            if not _category_ok(pair_type, value):
                continue
            text = print_expr(expr)
            if text in seen:
                continue
            seen.add(text)
            pairs.append(DataPair(text, print_value(value), pair_type))
            break
        else:
            raise GenExhausted(index, pair_type)
    return pairs


def split_name(input_text: str) -> str:
    """Deterministic 90/5/5 routing on a stable hash of the input text."""
    digest = hashlib.sha256(input_text.encode()).digest()
    bucket = int.from_bytes(digest[:8], "big") % 100
    if bucket < 90:
        return "train"
    if bucket < 95:
        return "dev"
    return "test"


def split_pairs(pairs: list[DataPair]) -> dict[str, list[DataPair]]:
    out: dict[str, list[DataPair]] = {name: [] for name in SPLITS}
    for pair in pairs:
        out[split_name(pair.input)].append(pair)
    return out


def write_jsonl(pairs: list[DataPair], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(
                json.dumps({"input": pair.input, "target": pair.target, "type": pair.type})
                + "\n"
            )


def read_jsonl(path: str | Path) -> list[DataPair]:
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            pairs.append(DataPair(obj["input"], obj["target"], obj["type"]))
    return pairs


def verify_pairs(pairs: list[DataPair]) -> list[tuple[int, str, str]]:
    """Re-evaluate every input; returns (index, expected, actual) mismatches."""
    mismatches = []
    for i, pair in enumerate(pairs):
        actual = print_value(evaluate(parse_text(pair.input)))
        if actual != pair.target:
            mismatches.append((i, pair.target, actual))
    return mismatches
