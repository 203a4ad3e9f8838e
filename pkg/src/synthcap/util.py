"""Budgets, seeding and small helpers."""

from __future__ import annotations

import itertools
import os
import zlib

import numpy as np

from .errors import BudgetExceeded

DEFAULT_BUDGET = 2**30


def budget(default: int = DEFAULT_BUDGET) -> int:
    """Enumeration budget in accumulation terms; SYNTHCAP_BUDGET overrides."""
    raw = os.environ.get("SYNTHCAP_BUDGET")
    if raw is None or raw.strip() == "":
        return default
    return int(float(raw))


def check_budget(terms: float, what: str, default: int = DEFAULT_BUDGET) -> None:
    limit = budget(default)
    if terms > limit:
        raise BudgetExceeded(f"{what}: {terms:.3g} terms exceeds budget {limit}")


def _key(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode())
    return int(part) & 0xFFFFFFFF


def rng_for(operation: str, seed: int, *index) -> np.random.Generator:
    """Counter-based generator for one (operation, seed, index) triple.

    Streams for different indices are independent, so trials may be run in
    any order or in parallel and still reproduce.
    """
    ss = np.random.SeedSequence([_key(operation), _key(seed), *(_key(i) for i in index)])
    return np.random.Generator(np.random.Philox(ss))


def sequences(k: int, n: int) -> np.ndarray:
    """All length-n sequences over range(k), lexicographic (row-major)."""
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grid = np.indices((k,) * n).reshape(n, -1).T
    return np.ascontiguousarray(grid, dtype=np.int64)


def seq_index(seq, k: int) -> int:
    """Row-major index of a sequence in :func:`sequences`."""
    idx = 0
    for s in seq:
        idx = idx * k + int(s)
    return idx


def ceil_pow2(x: float) -> int:
    """ceil(2**x) robust to float noise when 2**x is an integer."""
    v = 2.0**x
    r = round(v)
    if abs(v - r) <= 1e-9 * max(1.0, v):
        return max(int(r), 1)
    return max(int(np.ceil(v)), 1)


def set_partitions(items):
    """Yield all set partitions of a list as lists of blocks."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def product_atoms(alphabets) -> tuple[str, ...]:
    """Flattened labels of a product alphabet, joined with ','."""
    return tuple(",".join(t) for t in itertools.product(*alphabets))
