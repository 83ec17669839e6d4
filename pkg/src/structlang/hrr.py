"""Holographic embeddings: circular convolution binding in a fixed dimension.

All vectors share one dimension n.  Binding is circular convolution,

    [a (*) b]_mu = sum_nu a_nu b_(mu - nu mod n),

computed by FFT (and checked elsewhere against the direct sum).  Encoding
walks each binding's role path innermost-first, convolving with the role
vector at each step; in the default "permuted" mode the accumulated
vector is passed through a fixed pseudorandom permutation before each
convolution, which makes role order matter.  Unbinding is approximate,
so recovered vectors need a clean-up pass against the symbol codebook.
"""
from __future__ import annotations

import csv
import random
from dataclasses import dataclass

import numpy as np

from .errors import StructLangError
from .generate import rng_substream, sample_suffix_free_paths
from .semantics import MISS, Miss, Structure, Value
from .syntax import RolePath

PERMUTE_MODES = ("plain", "permuted")
UNBIND_MODES = ("correlation", "self")

_NORM_LO = 0.5
_NORM_HI = 1.5


class LengthMismatch(StructLangError):
    def __init__(self, len_a: int, len_b: int):
        super().__init__(f"vector lengths differ: {len_a} vs {len_b}")


def cconv(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Circular convolution via FFT; matches the direct summation to 1e-9."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise LengthMismatch(a.shape[-1] if a.ndim else 0, b.shape[-1] if b.ndim else 0)
    n = a.shape[0]
    return np.fft.irfft(np.fft.rfft(a) * np.fft.rfft(b), n)


def involution(a: np.ndarray) -> np.ndarray:
    """Index reversal modulo n: result[i] = a[(n - i) mod n]."""
    a = np.asarray(a, dtype=float)
    return np.concatenate((a[:1], a[:0:-1]))


@dataclass
class HrrCodebook:
    dim: int
    seed: int
    permute_mode: str
    symbol_vecs: dict[str, np.ndarray]
    role_vecs: dict[str, np.ndarray]
    permutation: np.ndarray
    inverse_permutation: np.ndarray

    @property
    def symbols(self) -> list[str]:
        return list(self.symbol_vecs)

    @property
    def roles(self) -> list[str]:
        return list(self.role_vecs)


class UnknownToken(StructLangError):
    def __init__(self, token: str):
        self.token = token
        super().__init__(f"token not in codebook: {token!r}")


def _draw_vec(rng: np.random.Generator, dim: int) -> np.ndarray:
    # redraw until the norm is moderate; keeps downstream cosines sane
    while True:
        v = rng.normal(0.0, 1.0 / np.sqrt(dim), dim)
        if _NORM_LO <= float(np.linalg.norm(v)) <= _NORM_HI:
            return v


def make_hrr_codebook(
    symbols: list[str],
    roles: list[str],
    dim: int,
    seed: int = 0,
    permute_mode: str = "permuted",
) -> HrrCodebook:
    if permute_mode not in PERMUTE_MODES:
        raise StructLangError(f"unknown permute mode: {permute_mode!r}")
    rng = np.random.default_rng(seed)
    symbol_vecs = {s: _draw_vec(rng, dim) for s in symbols}
    role_vecs = {r: _draw_vec(rng, dim) for r in roles}
    permutation = rng.permutation(dim)
    return HrrCodebook(
        dim=dim,
        seed=seed,
        permute_mode=permute_mode,
        symbol_vecs=symbol_vecs,
        role_vecs=role_vecs,
        permutation=permutation,
        inverse_permutation=np.argsort(permutation),
    )


def _permute(v: np.ndarray, cb: HrrCodebook) -> np.ndarray:
    if cb.permute_mode == "plain":
        return v
    return v[cb.permutation]


def _unpermute(v: np.ndarray, cb: HrrCodebook) -> np.ndarray:
    if cb.permute_mode == "plain":
        return v
    return v[cb.inverse_permutation]


def hrr_encode(s: Structure, cb: HrrCodebook) -> np.ndarray:
    """Sum over bindings of the role-path convolution of the symbol vector."""
    out = np.zeros(cb.dim)
    for path, sym in s.bindings.items():
        if sym not in cb.symbol_vecs:
            raise UnknownToken(sym)
        vec = cb.symbol_vecs[sym]
        for role in path:  # innermost first
            if role not in cb.role_vecs:
                raise UnknownToken(role)
            vec = cconv(_permute(vec, cb), cb.role_vecs[role])
        out = out + vec
    return out


def hrr_unbind(
    vec: np.ndarray, role: str, cb: HrrCodebook, mode: str = "correlation"
) -> np.ndarray:
    """Approximate inverse of one binding step; noisy, clean up afterwards."""
    if role not in cb.role_vecs:
        raise UnknownToken(role)
    if mode not in UNBIND_MODES:
        raise StructLangError(f"unknown unbind mode: {mode!r}")
    r = cb.role_vecs[role]
    if mode == "correlation":
        return _unpermute(cconv(vec, involution(r)), cb)
    return _unpermute(cconv(vec, r), cb)


def cleanup(vec: np.ndarray, cb: HrrCodebook, tau: float = 0.25) -> str | Miss:
    """Nearest symbol by cosine, or Miss below tau.  Ties keep codebook order."""
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        return MISS
    best_name: str | None = None
    best_cos = -np.inf
    for name, sym_vec in cb.symbol_vecs.items():
        denom = norm * float(np.linalg.norm(sym_vec))
        cos = float(np.dot(vec, sym_vec)) / denom
        if cos > best_cos:
            best_cos = cos
            best_name = name
    if best_name is None or best_cos < tau:
        return MISS
    return best_name


def hrr_decode(
    vec: np.ndarray, cb: HrrCodebook, max_depth: int = 2, tau: float = 0.25
) -> Value:
    """Probe every role path up to max_depth and clean up each probe.

    Enumeration is exhaustive (|roles| ** depth probes), so keep the role
    set and depth small.  Approximate by nature; probes that clean up to
    a symbol become bindings.
    """
    found: dict[RolePath, str] = {}

    def probe(stored_path: RolePath) -> None:
        v = vec
        for role in reversed(stored_path):  # outermost first
            v = hrr_unbind(v, role, cb)
        name = cleanup(v, cb, tau)
        if not isinstance(name, Miss):
            found[stored_path] = name

    paths: list[RolePath] = [()]
    frontier: list[RolePath] = [()]
    for _ in range(max_depth):
        frontier = [p + (r,) for p in frontier for r in cb.roles]
        paths.extend(frontier)
    for path in paths:
        probe(path)
    if not found:
        return MISS
    return Structure(found)


# --- capacity sweep ----------------------------------------------------


@dataclass(frozen=True)
class CapacityPoint:
    n: int
    mode: str
    depth: int
    bindings: int
    accuracy: float
    mean_cosine: float


_SWEEP_SYMBOL_POOL = 16
_SWEEP_ROLE_POOL = 8


def capacity_trial(
    n: int, mode: str, trial_rng: random.Random, bindings: int, max_depth: int
) -> tuple[bool, float]:
    """One trial: fresh codebook, random structure, query one full path."""
    symbols = [f"s{i:02d}" for i in range(_SWEEP_SYMBOL_POOL)]
    roles = [f"R{i}" for i in range(_SWEEP_ROLE_POOL)]
    cb_seed = trial_rng.getrandbits(32)
    cb = make_hrr_codebook(symbols, roles, n, seed=cb_seed, permute_mode="permuted")

    paths = sample_suffix_free_paths(trial_rng, tuple(roles), bindings, max_depth)
    while paths is None:
        paths = sample_suffix_free_paths(trial_rng, tuple(roles), bindings, max_depth)
    chosen_symbols = trial_rng.sample(symbols, bindings)
    structure = Structure(dict(zip(paths, chosen_symbols)))

    target_index = trial_rng.randrange(bindings)
    target_path = paths[target_index]
    target_symbol = chosen_symbols[target_index]

    vec = hrr_encode(structure, cb)
    for role in reversed(target_path):
        vec = hrr_unbind(vec, role, cb, mode)
    answer = cleanup(vec, cb)

    target_vec = cb.symbol_vecs[target_symbol]
    cos = float(
        np.dot(vec, target_vec) / (np.linalg.norm(vec) * np.linalg.norm(target_vec))
    )
    return answer == target_symbol, cos


def capacity_sweep(
    dims: list[int],
    modes: list[str] | None = None,
    trials: int = 1000,
    seed: int = 0,
    bindings: int = 3,
    max_depth: int = 2,
) -> list[CapacityPoint]:
    """Cleanup accuracy of single-symbol queries as dimension grows."""
    if modes is None:
        modes = list(UNBIND_MODES)
    points = []
    for n in dims:
        for mode in modes:
            correct = 0
            cosines = []
            for t in range(trials):
                rng = rng_substream(seed, n, mode, t)
                ok, cos = capacity_trial(n, mode, rng, bindings, max_depth)
                correct += int(ok)
                cosines.append(cos)
            points.append(
                CapacityPoint(
                    n=n,
                    mode=mode,
                    depth=max_depth,
                    bindings=bindings,
                    accuracy=correct / trials,
                    mean_cosine=float(np.mean(cosines)),
                )
            )
    return points


def write_capacity_csv(points: list[CapacityPoint], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "mode", "depth", "bindings", "accuracy", "mean_cosine"])
        for p in points:
            writer.writerow([p.n, p.mode, p.depth, p.bindings, p.accuracy, p.mean_cosine])
