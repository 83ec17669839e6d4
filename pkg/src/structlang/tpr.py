"""Tensor-product embeddings of structures, with exact role unbinding.

A structure maps role paths to symbols.  Each depth-d binding becomes the
outer product of its symbol vector with the d role vectors along the path,
giving a tensor of shape (symbol_dim, role_dim, ..., role_dim): symbol
axis first, role axes innermost-first, so the outermost role sits on the
LAST axis.  A representation keeps one such tensor per depth; depths
never mix.

Unbinding contracts the last axis with an unbinding vector.  Unbinding
vectors are rows of the pseudo-inverse of the role matrix, so that
r_k . u_j = delta_kj and recovery is exact (up to float error) whenever
the role vectors are linearly independent.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import StructLangError
from .semantics import MISS, Structure, Value
from .syntax import RolePath

SCHEMES = ("one_hot", "gaussian", "orthogonal")

_COND_LIMIT = 1e6
_GAUSSIAN_RETRIES = 100
_BIORTH_TOL = 1e-9


class DimTooSmall(StructLangError):
    def __init__(self, what: str, dim: int, needed: int):
        super().__init__(f"{what} dimension {dim} is too small for {needed} vectors")


class IllConditioned(StructLangError):
    def __init__(self) -> None:
        super().__init__(
            f"no well-conditioned gaussian codebook found in {_GAUSSIAN_RETRIES} tries"
        )


class UnknownToken(StructLangError):
    def __init__(self, token: str):
        self.token = token
        super().__init__(f"token not in codebook: {token!r}")


class AmbiguousDecode(StructLangError):
    def __init__(self, path: RolePath):
        super().__init__(
            f"two symbols decode above coefficient 0.5 at path {':'.join(path) or '(root)'}"
        )


@dataclass
class Codebook:
    symbol_dim: int
    role_dim: int
    scheme: str
    seed: int
    symbol_vecs: dict[str, np.ndarray]
    role_vecs: dict[str, np.ndarray]
    unbind_vecs: dict[str, np.ndarray]
    role_cond: float
    symbol_cond: float

    @property
    def symbols(self) -> list[str]:
        return list(self.symbol_vecs)

    @property
    def roles(self) -> list[str]:
        return list(self.role_vecs)


def _cond(matrix: np.ndarray) -> float:
    s = np.linalg.svd(matrix, compute_uv=False)
    if s[-1] == 0.0:
        return float("inf")
    return float(s[0] / s[-1])


def _draw_matrices(
    rng: np.random.Generator, scheme: str, n_sym: int, sym_dim: int, n_role: int, role_dim: int
) -> tuple[np.ndarray, np.ndarray]:
    if scheme == "one_hot":
        return np.eye(sym_dim)[:n_sym].copy(), np.eye(role_dim)[:n_role].copy()
    if scheme == "orthogonal":
        q_sym = np.linalg.qr(rng.standard_normal((sym_dim, sym_dim)))[0]
        q_role = np.linalg.qr(rng.standard_normal((role_dim, role_dim)))[0]
        return q_sym.T[:n_sym].copy(), q_role.T[:n_role].copy()
    if scheme == "gaussian":
        return (
            rng.standard_normal((n_sym, sym_dim)),
            rng.standard_normal((n_role, role_dim)),
        )
    raise StructLangError(f"unknown codebook scheme: {scheme!r}")


def make_codebook(
    symbols: list[str],
    roles: list[str],
    symbol_dim: int,
    role_dim: int,
    scheme: str = "gaussian",
    seed: int = 0,
) -> Codebook:
    """Deterministic codebook; same arguments give identical vectors."""
    if scheme not in SCHEMES:
        raise StructLangError(f"unknown codebook scheme: {scheme!r}")
    if not symbols or not roles:
        raise StructLangError("codebook needs at least one symbol and one role")
    if scheme in ("one_hot", "orthogonal"):
        if symbol_dim < len(symbols):
            raise DimTooSmall("symbol", symbol_dim, len(symbols))
        if role_dim < len(roles):
            raise DimTooSmall("role", role_dim, len(roles))
    rng = np.random.default_rng(seed)
    for _ in range(_GAUSSIAN_RETRIES):
        sym_matrix, role_matrix = _draw_matrices(
            rng, scheme, len(symbols), symbol_dim, len(roles), role_dim
        )
        role_cond = _cond(role_matrix)
        symbol_cond = _cond(sym_matrix)
        if role_cond < _COND_LIMIT and symbol_cond < _COND_LIMIT:
            break
        if scheme != "gaussian":
            break
    else:
        raise IllConditioned()
    if not (role_cond < _COND_LIMIT and symbol_cond < _COND_LIMIT):
        raise IllConditioned()

    # rows of pinv(R).T satisfy r_k . u_j = delta_kj for independent roles
    unbind_matrix = np.linalg.pinv(role_matrix).T
    residual = np.abs(role_matrix @ unbind_matrix.T - np.eye(len(roles))).max() if roles else 0.0
    if residual > _BIORTH_TOL:
        raise IllConditioned()

    return Codebook(
        symbol_dim=symbol_dim,
        role_dim=role_dim,
        scheme=scheme,
        seed=seed,
        symbol_vecs={s: sym_matrix[i] for i, s in enumerate(symbols)},
        role_vecs={r: role_matrix[i] for i, r in enumerate(roles)},
        unbind_vecs={r: unbind_matrix[i] for i, r in enumerate(roles)},
        role_cond=role_cond,
        symbol_cond=symbol_cond,
    )


@dataclass
class TprRep:
    """One tensor per binding depth; missing depths are implicitly zero."""

    components: dict[int, np.ndarray]

    def norm(self) -> float:
        return float(
            np.sqrt(sum(float(np.sum(c * c)) for c in self.components.values()))
        )

    def max_depth(self) -> int:
        return max(self.components, default=0)

    def __add__(self, other: "TprRep") -> "TprRep":
        out: dict[int, np.ndarray] = {}
        for depth in sorted(set(self.components) | set(other.components)):
            a = self.components.get(depth)
            b = other.components.get(depth)
            out[depth] = (a + b) if (a is not None and b is not None) else (a if a is not None else b).copy()
        return TprRep(out)

    def allclose(self, other: "TprRep", atol: float = 1e-9) -> bool:
        for depth in set(self.components) | set(other.components):
            a = self.components.get(depth)
            b = other.components.get(depth)
            if a is None:
                a = np.zeros_like(b)
            if b is None:
                b = np.zeros_like(a)
            if not np.allclose(a, b, atol=atol, rtol=0.0):
                return False
        return True


def _component_shape(cb: Codebook, depth: int) -> tuple[int, ...]:
    return (cb.symbol_dim,) + (cb.role_dim,) * depth


def zero_rep(cb: Codebook, max_depth: int = 0) -> TprRep:
    return TprRep({d: np.zeros(_component_shape(cb, d)) for d in range(max_depth + 1)})


def tpr_encode(s: Structure, cb: Codebook) -> TprRep:
    """Sum of one outer-product tensor per binding, grouped by depth."""
    components: dict[int, np.ndarray] = {}
    for path, sym in s.bindings.items():
        if sym not in cb.symbol_vecs:
            raise UnknownToken(sym)
        tensor = cb.symbol_vecs[sym]
        for role in path:
            if role not in cb.role_vecs:
                raise UnknownToken(role)
            tensor = np.multiply.outer(tensor, cb.role_vecs[role])
        depth = len(path)
        if depth in components:
            components[depth] = components[depth] + tensor
        else:
            components[depth] = tensor
    return TprRep(components)


def tpr_unbind(rep: TprRep, role: str, cb: Codebook) -> TprRep:
    """Contract the outermost role axis with the role's unbinding vector.

    The depth-0 component has no role axis and is discarded.
    """
    if role not in cb.unbind_vecs:
        raise UnknownToken(role)
    u = cb.unbind_vecs[role]
    out: dict[int, np.ndarray] = {}
    for depth, tensor in rep.components.items():
        if depth == 0:
            continue
        out[depth - 1] = np.tensordot(tensor, u, axes=([depth], [0]))
    return TprRep(out)


def _decode_tol(cb: Codebook, miss_tol: float) -> float:
    smallest = min(float(np.linalg.norm(v)) for v in cb.symbol_vecs.values())
    return miss_tol * smallest


def tpr_decode(
    rep: TprRep, cb: Codebook, max_depth: int = 4, miss_tol: float = 1e-6
) -> Value:
    """Recover the structure by probing role paths up to max_depth.

    Walks paths outermost-first, contracting one unbinding vector at a
    time and pruning branches whose remaining tensors are near zero, so
    cost scales with the content rather than |roles|**depth.  Each
    surviving depth-0 vector is matched against the symbol vectors by
    least squares; a coefficient above 0.5 with a small residual emits a
    binding, and two such coefficients on one path raise AmbiguousDecode.
    """
    tol = _decode_tol(cb, miss_tol)
    if rep.norm() < tol:
        return MISS

    sym_matrix = np.stack([cb.symbol_vecs[s] for s in cb.symbols])  # (n_sym, dim)
    pinv_t = np.linalg.pinv(sym_matrix.T)  # coeffs = pinv_t @ vec
    names = cb.symbols
    found: dict[RolePath, str] = {}

    def match(vec: np.ndarray, path: RolePath) -> None:
        if float(np.linalg.norm(vec)) < tol:
            return
        coeffs = pinv_t @ vec
        residual = float(np.linalg.norm(sym_matrix.T @ coeffs - vec))
        if residual >= tol:
            return
        hits = [i for i, c in enumerate(coeffs) if c > 0.5]
        if len(hits) > 1:
            raise AmbiguousDecode(path)
        if hits:
            found[path] = names[hits[0]]

    def walk(components: dict[int, np.ndarray], peeled: list[str]) -> None:
        vec = components.get(0)
        if vec is not None:
            # outermost-first peel order means the stored path is reversed
            match(vec, tuple(reversed(peeled)))
        if len(peeled) >= max_depth:
            return
        deeper = {d: t for d, t in components.items() if d >= 1}
        if not deeper:
            return
        for role in cb.roles:
            u = cb.unbind_vecs[role]
            peeled_components: dict[int, np.ndarray] = {}
            for depth, tensor in deeper.items():
                contracted = np.tensordot(tensor, u, axes=([depth], [0]))
                if float(np.linalg.norm(contracted)) >= tol:
                    peeled_components[depth - 1] = contracted
            if peeled_components:
                walk(peeled_components, peeled + [role])

    walk(rep.components, [])
    if not found:
        return MISS
    return Structure(found)


def flatten_rep(rep: TprRep, cb: Codebook, max_depth: int) -> np.ndarray:
    """Concatenate depth components 0..max_depth, row-major, zeros where absent."""
    parts = []
    for depth in range(max_depth + 1):
        tensor = rep.components.get(depth)
        if tensor is None:
            tensor = np.zeros(_component_shape(cb, depth))
        parts.append(np.asarray(tensor).reshape(-1))
    return np.concatenate(parts)


def save_codebook(cb: Codebook, path: str | Path) -> None:
    payload = {
        "symbol_dim": cb.symbol_dim,
        "role_dim": cb.role_dim,
        "scheme": cb.scheme,
        "seed": cb.seed,
        "role_cond": cb.role_cond,
        "symbol_cond": cb.symbol_cond,
        "symbol_vecs": {s: v.tolist() for s, v in cb.symbol_vecs.items()},
        "role_vecs": {r: v.tolist() for r, v in cb.role_vecs.items()},
        "unbind_vecs": {r: v.tolist() for r, v in cb.unbind_vecs.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_codebook(path: str | Path) -> Codebook:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    return Codebook(
        symbol_dim=payload["symbol_dim"],
        role_dim=payload["role_dim"],
        scheme=payload["scheme"],
        seed=payload["seed"],
        symbol_vecs={s: np.asarray(v) for s, v in payload["symbol_vecs"].items()},
        role_vecs={r: np.asarray(v) for r, v in payload["role_vecs"].items()},
        unbind_vecs={r: np.asarray(v) for r, v in payload["unbind_vecs"].items()},
        role_cond=payload["role_cond"],
        symbol_cond=payload["symbol_cond"],
    )
