"""Finite-alphabet distributions and information measures (bits throughout)."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import AlphabetError, InvalidDistribution

SUM_TOL = 1e-12
LN2 = np.log(2.0)


def _labels(atoms, k: int | None = None) -> tuple[str, ...]:
    if atoms is None:
        return tuple(str(i) for i in range(k))
    return tuple(str(a) for a in atoms)


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


def _check_probs(probs: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(probs)):
        raise InvalidDistribution(f"{what}: non-finite probability")
    if np.any(probs < 0):
        raise InvalidDistribution(f"{what}: negative probability {probs.min():.3g}")
    s = probs.sum()
    if abs(s - 1.0) > SUM_TOL:
        raise InvalidDistribution(f"{what}: probabilities sum to {s!r}")


def _clean(arr, normalize: bool) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    if normalize:
        arr = np.where(arr < 0, 0.0, arr)
        s = arr.sum()
        if s <= 0:
            raise InvalidDistribution("cannot normalize a zero vector")
        arr = arr / s
    return arr


@dataclass(frozen=True, eq=False)
class Pmf:
    """Probability mass function over a labelled finite alphabet."""

    atoms: tuple[str, ...]
    probs: np.ndarray

    def __post_init__(self):
        probs = _frozen(self.probs)
        atoms = _labels(self.atoms)
        if probs.ndim != 1 or len(atoms) != probs.size:
            raise InvalidDistribution("atoms and probs must have equal length")
        if len(set(atoms)) != len(atoms):
            raise AlphabetError("duplicate atoms")
        _check_probs(probs, "Pmf")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def from_probs(cls, probs, atoms=None, normalize: bool = False) -> "Pmf":
        p = _clean(probs, normalize).ravel()
        return cls(_labels(atoms, p.size), p)

    @classmethod
    def uniform(cls, k_or_atoms) -> "Pmf":
        if isinstance(k_or_atoms, int):
            atoms = _labels(None, k_or_atoms)
        else:
            atoms = _labels(k_or_atoms)
        return cls(atoms, np.full(len(atoms), 1.0 / len(atoms)))

    def __len__(self) -> int:
        return len(self.atoms)

    def index(self, atom) -> int:
        return _index(self.atoms, atom)

    def __getitem__(self, atom) -> float:
        return float(self.probs[self.index(atom)])

    def to_dict(self) -> dict:
        return {"atoms": list(self.atoms), "probs": self.probs.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Pmf":
        return cls(tuple(d["atoms"]), np.asarray(d["probs"], dtype=float))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _index(alphabet: Sequence[str], atom) -> int:
    if str(atom) in alphabet:
        return alphabet.index(str(atom))
    if isinstance(atom, (int, np.integer)) and 0 <= int(atom) < len(alphabet):
        return int(atom)
    raise AlphabetError(f"{atom!r} not in alphabet {tuple(alphabet)}")


@dataclass(frozen=True, eq=False)
class Channel:
    """Conditional pmf as a row-stochastic matrix (rows indexed by inputs)."""

    input_alphabet: tuple[str, ...]
    output_alphabet: tuple[str, ...]
    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        ins, outs = _labels(self.input_alphabet), _labels(self.output_alphabet)
        if m.shape != (len(ins), len(outs)):
            raise InvalidDistribution(f"matrix shape {m.shape} does not match alphabets")
        for i, row in enumerate(m):
            _check_probs(row, f"Channel row {ins[i]!r}")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "input_alphabet", ins)
        object.__setattr__(self, "output_alphabet", outs)

    @classmethod
    def from_matrix(cls, matrix, inputs=None, outputs=None, normalize: bool = False) -> "Channel":
        m = np.array(matrix, dtype=float)
        if normalize:
            m = np.where(m < 0, 0.0, m)
            m = m / m.sum(axis=1, keepdims=True)
        return cls(_labels(inputs, m.shape[0]), _labels(outputs, m.shape[1]), m)

    @classmethod
    def identity(cls, k: int) -> "Channel":
        return cls.from_matrix(np.eye(k))

    @property
    def rows(self) -> tuple[Pmf, ...]:
        return tuple(Pmf(self.output_alphabet, r) for r in self.matrix)

    def output(self, p: Pmf) -> Pmf:
        """Output marginal when the input is drawn from p."""
        _same(p.atoms, self.input_alphabet)
        return Pmf.from_probs(p.probs @ self.matrix, self.output_alphabet, normalize=True)

    def joint(self, p: Pmf) -> "JointPmf":
        """Joint pmf of (input, output)."""
        _same(p.atoms, self.input_alphabet)
        return JointPmf.from_table(p.probs[:, None] * self.matrix,
                                   (self.input_alphabet, self.output_alphabet), normalize=True)

    def to_dict(self) -> dict:
        return {"input": list(self.input_alphabet), "output": list(self.output_alphabet),
                "rows": self.matrix.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Channel":
        return cls(tuple(d["input"]), tuple(d["output"]), np.asarray(d["rows"], dtype=float))


@dataclass(frozen=True, eq=False)
class JointPmf:
    """Joint pmf over several coordinates; ``table`` has one axis per coordinate."""

    alphabets: tuple[tuple[str, ...], ...]
    table: np.ndarray

    def __post_init__(self):
        t = _frozen(self.table)
        alph = tuple(_labels(a) for a in self.alphabets)
        if t.shape != tuple(len(a) for a in alph):
            raise InvalidDistribution(f"table shape {t.shape} does not match alphabets")
        _check_probs(t.ravel(), "JointPmf")
        object.__setattr__(self, "table", t)
        object.__setattr__(self, "alphabets", alph)

    @classmethod
    def from_table(cls, table, alphabets=None, normalize: bool = False) -> "JointPmf":
        t = _clean(table, normalize)
        if alphabets is None:
            alphabets = tuple(_labels(None, k) for k in t.shape)
        return cls(tuple(alphabets), t)

    @classmethod
    def product(cls, *pmfs: Pmf) -> "JointPmf":
        t = np.ones(())
        for p in pmfs:
            t = np.multiply.outer(t, p.probs)
        return cls.from_table(t, tuple(p.atoms for p in pmfs), normalize=True)

    @property
    def ndim(self) -> int:
        return self.table.ndim

    def marginal(self, axes) -> "JointPmf | Pmf":
        """Marginal on the given coordinate(s); a single int gives a Pmf."""
        if isinstance(axes, (int, np.integer)):
            keep = (int(axes),)
        else:
            keep = tuple(int(a) for a in axes)
        drop = tuple(i for i in range(self.ndim) if i not in keep)
        t = self.table.sum(axis=drop)
        ranked = sorted(keep)
        t = np.transpose(t, [ranked.index(k) for k in keep])
        if isinstance(axes, (int, np.integer)):
            return Pmf.from_probs(t, self.alphabets[keep[0]], normalize=True)
        return JointPmf.from_table(t, tuple(self.alphabets[k] for k in keep), normalize=True)

    def flatten(self) -> Pmf:
        from .util import product_atoms
        return Pmf.from_probs(self.table.ravel(), product_atoms(self.alphabets), normalize=True)


def _same(a, b) -> None:
    if tuple(a) != tuple(b):
        raise AlphabetError(f"alphabet mismatch: {tuple(a)} vs {tuple(b)}")


def _array(p) -> np.ndarray:
    if isinstance(p, Pmf):
        return p.probs
    if isinstance(p, JointPmf):
        return p.table
    return np.asarray(p, dtype=float)


def entropy_array(p) -> float:
    """Shannon entropy in bits of a nonnegative array summing to one."""
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def entropy(p) -> float:
    """H(p) in bits with 0 log 0 = 0; accepts a Pmf, JointPmf or array."""
    return max(entropy_array(_array(p)), 0.0)


def mutual_information(j) -> float:
    """I(A;B) in bits for a two-coordinate joint."""
    t = _array(j)
    if t.ndim != 2:
        raise AlphabetError("mutual_information needs a 2-coordinate joint")
    mi = entropy_array(t.sum(1)) + entropy_array(t.sum(0)) - entropy_array(t)
    return max(mi, 0.0)


def total_variation(p, q) -> float:
    """Half the L1 distance; Pmf/JointPmf arguments must share alphabets."""
    if isinstance(p, Pmf) and isinstance(q, Pmf):
        _same(p.atoms, q.atoms)
    elif isinstance(p, JointPmf) and isinstance(q, JointPmf):
        if p.alphabets != q.alphabets:
            raise AlphabetError("alphabet mismatch between joints")
    a, b = _array(p), _array(q)
    if a.shape != b.shape:
        raise AlphabetError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(min(0.5 * np.abs(a - b).sum(), 1.0))


def density_table(j) -> np.ndarray:
    """Matrix of information densities log2 j/(jU jV); -inf on zero mass."""
    t = _array(j)
    prod = np.outer(t.sum(1), t.sum(0))
    out = np.full(t.shape, -np.inf)
    pos = t > 0
    out[pos] = np.log2(t[pos]) - np.log2(prod[pos])
    return out


def information_density(j: JointPmf, u, v) -> float:
    """i(u;v) in bits for labelled atoms (or integer positions)."""
    if j.ndim != 2:
        raise AlphabetError("information_density needs a 2-coordinate joint")
    iu, iv = _index(j.alphabets[0], u), _index(j.alphabets[1], v)
    return float(density_table(j)[iu, iv])


def _log2_mean_exp2(logp: np.ndarray, x: np.ndarray) -> float:
    """log2 sum_i 2^{logp_i + x_i} computed stably."""
    return float(logsumexp((logp + x) * LN2) / LN2)


def renyi_information_raw(t: np.ndarray, alpha: float) -> float:
    pos = t > 0
    if abs(alpha - 1.0) < 1e-12:
        return mutual_information(t)
    i = density_table(t)[pos]
    return _log2_mean_exp2(np.log2(t[pos]), (alpha - 1.0) * i) / (alpha - 1.0)


def renyi_information(j, alpha: float) -> float:
    """Order-alpha Renyi divergence between the joint and its marginal product."""
    if alpha < 1:
        raise ValueError(f"alpha must be >= 1, got {alpha}")
    return renyi_information_raw(_array(j), float(alpha))


def renyi_bar_raw(t: np.ndarray, alpha: float) -> float:
    """The modified order-alpha quantity for any real alpha (limit at 1)."""
    if abs(alpha - 1.0) < 1e-12:
        return mutual_information(t)
    pv = t.sum(0)
    i = density_table(t)
    s = alpha - 1.0
    inner = np.full(t.shape[1], -np.inf)
    for v in range(t.shape[1]):
        if pv[v] <= 0:
            continue
        col = t[:, v] > 0
        inner[v] = _log2_mean_exp2(np.log2(t[col, v] / pv[v]), s * i[col, v])
    keep = pv > 0
    outer = _log2_mean_exp2(np.log2(pv[keep]), inner[keep] / 2.0)
    return 2.0 * outer / s


def renyi_information_bar(j, alpha: float) -> float:
    """Modified Renyi information (outer square-root average over V)."""
    if not 0 < alpha <= 2:
        raise ValueError(f"alpha must lie in (0, 2], got {alpha}")
    return renyi_bar_raw(_array(j), float(alpha))


def hypothesis_floor(tv: float) -> float:
    """Lower bound 1 - tv on the sum of the two error probabilities."""
    if not -1e-12 <= tv <= 1 + 1e-12:
        raise ValueError(f"tv must lie in [0,1], got {tv}")
    return 1.0 - min(max(tv, 0.0), 1.0)


def random_time_marginal(seq: JointPmf, t_weights) -> Pmf:
    """Mixture over time indices of the per-coordinate marginals."""
    w = _array(t_weights).ravel()
    if w.size != seq.ndim:
        raise AlphabetError(f"{w.size} weights for {seq.ndim} coordinates")
    alph = seq.alphabets[0]
    if any(a != alph for a in seq.alphabets):
        raise AlphabetError("coordinates must share one alphabet")
    acc = np.zeros(len(alph))
    for t in range(seq.ndim):
        axes = tuple(i for i in range(seq.ndim) if i != t)
        acc += w[t] * seq.table.sum(axis=axes)
    return Pmf.from_probs(acc, alph, normalize=True)


def expectation(p, f) -> float:
    """E_p f for an array of function values aligned with p."""
    return float((_array(p) * np.asarray(f, dtype=float)).sum())


def binary_entropy(p: float) -> float:
    return entropy_array([p, 1.0 - p])
