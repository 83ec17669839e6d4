"""Vector file format shared by the embedding back ends.

JSON Lines, one object per expression: {"expr": <text>, "vector": [floats]}.
Expression text is the canonical printed form, so lookups can match on
exact strings.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import IoError


def write_vectors_jsonl(
    items: Iterable[tuple[str, np.ndarray]], path: str | Path
) -> None:
    if isinstance(items, dict):
        items = items.items()
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for expr, vec in items:
                fh.write(
                    json.dumps({"expr": expr, "vector": np.asarray(vec).tolist()}) + "\n"
                )
    except OSError as exc:
        raise IoError(f"cannot write vectors to {path}: {exc}") from exc


def read_vectors_jsonl(path: str | Path) -> dict[str, np.ndarray]:
    lookup: dict[str, np.ndarray] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                lookup[obj["expr"]] = np.asarray(obj["vector"], dtype=float)
    except OSError as exc:
        raise IoError(f"cannot read vectors from {path}: {exc}") from exc
    return lookup
