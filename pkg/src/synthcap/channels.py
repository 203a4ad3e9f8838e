"""Built-in example channels and JSON channel specs."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .prob import Channel, Pmf

BUILTINS = ("erasure", "reverse-erasure", "scatter", "bsc", "identity")


def _prob(p: float, name: str) -> float:
    p = float(p)
    if not 0 < p < 1:
        raise ValueError(f"{name} parameter must lie in (0, 1), got {p}")
    return p


def _size(k, name: str, low: int) -> int:
    if float(k) != int(float(k)) or int(float(k)) < low:
        raise ValueError(f"{name} parameter must be an integer >= {low}, got {k}")
    return int(float(k))


def erasure(p: float) -> tuple[Pmf, Channel]:
    """Uniform binary input; outputs ordered (0, e, 1)."""
    p = _prob(p, "erasure")
    m = np.array([[1 - p, p, 0.0], [0.0, p, 1 - p]])
    return Pmf.uniform(("0", "1")), Channel.from_matrix(m, ("0", "1"), ("0", "e", "1"))


def reverse_erasure(p: float) -> tuple[Pmf, Channel]:
    """Input (0, e, 1) with erasure mass p; e is sent to 0 or 1 uniformly."""
    p = _prob(p, "reverse-erasure")
    q = Pmf(("0", "e", "1"), np.array([(1 - p) / 2, p, (1 - p) / 2]))
    m = np.array([[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]])
    return q, Channel.from_matrix(m, ("0", "e", "1"), ("0", "1"))


def scatter(m: int) -> tuple[Pmf, Channel]:
    """Uniform input on m symbols; output uniform over the other m - 1."""
    m = _size(m, "scatter", 3)
    labels = tuple(str(i) for i in range(m))
    return Pmf.uniform(labels), Channel.from_matrix((1 - np.eye(m)) / (m - 1), labels, labels)


def bsc(p: float) -> tuple[Pmf, Channel]:
    p = float(p)
    if not 0 <= p <= 1:
        raise ValueError(f"bsc parameter must lie in [0, 1], got {p}")
    m = np.array([[1 - p, p], [p, 1 - p]])
    return Pmf.uniform(("0", "1")), Channel.from_matrix(m, ("0", "1"), ("0", "1"))


def identity(k: int) -> tuple[Pmf, Channel]:
    k = _size(k, "identity", 1)
    labels = tuple(str(i) for i in range(k))
    return Pmf.uniform(labels), Channel.from_matrix(np.eye(k), labels, labels)


_FACTORIES = {"erasure": erasure, "reverse-erasure": reverse_erasure, "scatter": scatter,
              "bsc": bsc, "identity": identity}


def builtin_channel(name: str, arg) -> tuple[Pmf, Channel]:
    """Input pmf and channel for one of the named examples."""
    if name not in _FACTORIES:
        raise ValueError(f"unknown builtin channel {name!r}; choose from {', '.join(BUILTINS)}")
    return _FACTORIES[name](arg)


def channel_from_dict(d: dict) -> tuple[Pmf, Channel]:
    """Either {"builtin": name, "param": v} or a channel dict with optional "input_probs"."""
    if "builtin" in d:
        return builtin_channel(d["builtin"], d.get("param"))
    ch = Channel.from_dict(d)
    probs = d.get("input_probs")
    if probs is None:
        q = Pmf.uniform(ch.input_alphabet)
    else:
        q = Pmf(ch.input_alphabet, np.asarray(probs, dtype=float))
    return q, ch


def load_channel(path) -> tuple[Pmf, Channel]:
    with open(Path(path)) as fh:
        return channel_from_dict(json.load(fh))


def channel_to_dict(q: Pmf, ch: Channel) -> dict:
    d = ch.to_dict()
    d["input_probs"] = [float(v) for v in q.probs]
    return d
