"""Random-codebook channel synthesis with a likelihood encoder.

A codebook u^n(j, k) is drawn i.i.d. from p_U.  Given x^n and the common
randomness k, the encoder picks j with probability proportional to
prod_t p_{X|U}(x_t | u_t(j, k)); the decoder passes u^n(j, k) through
p_{Y|U}.  For small n the induced joint is computed exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .errors import AlphabetError, BudgetExceeded, InvariantViolation
from .prob import Channel, Pmf
from .regions.types import AuxDecomposition, RatePoint, fmt
from .util import ceil_pow2, check_budget, rng_for, seq_index, sequences

CODEBOOK_ENTRIES = 2**27
MC_MAX_N = 4


@dataclass(frozen=True, eq=False)
class SynthesisCode:
    """Codebook indexed as codebook[j, k, t] with auxiliary-symbol indices."""

    n: int
    R: float
    R0: float
    codebook: np.ndarray
    aux: AuxDecomposition

    def __post_init__(self):
        cb = np.array(self.codebook, dtype=np.int64)
        if cb.ndim != 3 or cb.shape[2] != self.n:
            raise ValueError("codebook must have shape (M, M0, n)")
        if cb.size and (cb.min() < 0 or cb.max() >= self.aux.size):
            raise AlphabetError("codeword symbol outside the auxiliary alphabet")
        cb.setflags(write=False)
        object.__setattr__(self, "codebook", cb)

    @property
    def M(self) -> int:
        return self.codebook.shape[0]

    @property
    def M0(self) -> int:
        return self.codebook.shape[1]

    @property
    def x_alphabet(self) -> tuple[str, ...]:
        return self.aux.p_x_given_u.output_alphabet

    @property
    def y_alphabet(self) -> tuple[str, ...]:
        return self.aux.p_y_given_u.output_alphabet

    def flat(self) -> np.ndarray:
        """Codewords as rows, row index j * M0 + k."""
        return np.ascontiguousarray(self.codebook.reshape(-1, self.n))

    def to_dict(self) -> dict:
        return {"n": self.n, "R": self.R, "R0": self.R0, "M": self.M, "M0": self.M0,
                "codebook": self.codebook.tolist(), "aux": self.aux.to_dict(),
                "sizes": "ceil(2^(nR)), ceil(2^(nR0))"}

    @classmethod
    def from_dict(cls, d: dict) -> "SynthesisCode":
        cb = np.asarray(d["codebook"], dtype=np.int64).reshape(d["M"], d["M0"], d["n"])
        return cls(d["n"], d["R"], d["R0"], cb, AuxDecomposition.from_dict(d["aux"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True, eq=False)
class InducedJoint:
    """P(x^n, y^n) as a |X|^n x |Y|^n table over lexicographic sequences."""

    n: int
    table: np.ndarray
    provenance: str = "exact"
    trials: int | None = None

    def __post_init__(self):
        if self.provenance == "exact" and abs(self.table.sum() - 1.0) > 1e-9:
            raise InvariantViolation(f"induced joint sums to {self.table.sum()!r}")

    def x_marginal(self) -> np.ndarray:
        return self.table.sum(axis=1)


def _log(m: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(m)


def _indices(seq, alphabet) -> np.ndarray:
    out = []
    for s in seq:
        if isinstance(s, (int, np.integer)) and 0 <= int(s) < len(alphabet):
            out.append(int(s))
        elif str(s) in alphabet:
            out.append(alphabet.index(str(s)))
        else:
            raise AlphabetError(f"symbol {s!r} not in alphabet {alphabet}")
    return np.asarray(out, dtype=np.int64)


def iid_power(p: np.ndarray, n: int) -> np.ndarray:
    """Product pmf over length-n sequences in lexicographic order."""
    out = np.ones(1)
    for _ in range(n):
        out = np.multiply.outer(out, p).ravel()
    return out


def product_target(q_xy: np.ndarray, n: int) -> np.ndarray:
    """Table T[x^n, y^n] = prod_t q(x_t, y_t)."""
    t = np.ones((1, 1))
    nx, ny = q_xy.shape
    for _ in range(n):
        t = (t[:, None, :, None] * q_xy[None, :, None, :]).reshape(t.shape[0] * nx, -1)
    return t


def generate_code(aux: AuxDecomposition, n: int, R: float, R0: float, seed: int) -> SynthesisCode:
    """Draw u^n(j, k) i.i.d. from p_U with M = ceil(2^{nR}), M0 = ceil(2^{nR0})."""
    if R < 0 or R0 < 0:
        raise ValueError("rates must be nonnegative")
    if n < 1:
        raise ValueError("block length must be positive")
    M, M0 = ceil_pow2(n * R), ceil_pow2(n * R0)
    check_budget(float(M) * M0 * n, "codebook entries", CODEBOOK_ENTRIES)
    rng = rng_for("codebook", seed, n)
    cb = rng.choice(aux.size, size=(M, M0, n), p=aux.p_u.probs)
    return SynthesisCode(n, float(R), float(R0), cb, aux)


def _softmax_rows(logl: np.ndarray) -> np.ndarray:
    """Normalize exp(logl) along the last axis; uniform where all are -inf."""
    top = logl.max(axis=-1, keepdims=True)
    dead = ~np.isfinite(top)
    w = np.exp(logl - np.where(dead, 0.0, top))
    w = np.where(dead, 1.0, w)
    return w / w.sum(axis=-1, keepdims=True)


def likelihood_encode(code: SynthesisCode, x_seq, k: int, rng: np.random.Generator) -> int:
    """Sample j with probability proportional to the likelihood of x^n under u^n(j, k)."""
    if not 0 <= k < code.M0:
        raise IndexError(f"k = {k} outside [0, {code.M0})")
    x = _indices(x_seq, code.x_alphabet)
    if x.size != code.n:
        raise ValueError("source sequence has the wrong length")
    logl = kernels.sequence_loglik(np.ascontiguousarray(code.codebook[:, k, :]), x[None, :],
                                   _log(code.aux.p_x_given_u.matrix))[0]
    p = _softmax_rows(logl)
    return int(rng.choice(code.M, p=p))


def decode_sample(code: SynthesisCode, j: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """y_t drawn independently from p_{Y|U}(. | u_t(j, k)); returns symbol indices."""
    if not (0 <= j < code.M and 0 <= k < code.M0):
        raise IndexError(f"(j, k) = ({j}, {k}) out of range")
    cum = np.cumsum(code.aux.p_y_given_u.matrix, axis=1)
    rows = cum[code.codebook[j, k]]
    draws = rng.random(code.n)
    y = (draws[:, None] >= rows).sum(axis=1)
    return np.minimum(y, rows.shape[1] - 1)


def _check_exact(code: SynthesisCode) -> tuple[int, int]:
    sx, sy = len(code.x_alphabet) ** code.n, len(code.y_alphabet) ** code.n
    c = code.M * code.M0
    check_budget(float(sx) * sy * c + float(sx + sy) * c * code.n,
                 "exact induced joint (use monte_carlo_tv)")
    return sx, sy


def _likelihoods(code: SynthesisCode, matrix: np.ndarray) -> np.ndarray:
    seqs = sequences(matrix.shape[1], code.n)
    return kernels.sequence_loglik(code.flat(), seqs, _log(matrix))


def encoder_table(code: SynthesisCode) -> np.ndarray:
    """enc[x^n, j, k] = P(J = j | x^n, K = k)."""
    logl = _likelihoods(code, code.aux.p_x_given_u.matrix)
    logl = logl.reshape(-1, code.M, code.M0)
    return _softmax_rows(np.swapaxes(logl, 1, 2)).swapaxes(1, 2)


def exact_induced_joint(code: SynthesisCode, q_x: Pmf) -> InducedJoint:
    """P(x^n, y^n) = q_X^n(x^n) (1/M0) sum_{j,k} enc(j | x^n, k) p_{Y|U}^n(y^n | u^n(j,k))."""
    if q_x.atoms != code.x_alphabet:
        raise AlphabetError("q_x alphabet differs from the code's X alphabet")
    _check_exact(code)
    enc = encoder_table(code).reshape(-1, code.M * code.M0)
    dec = np.exp(_likelihoods(code, code.aux.p_y_given_u.matrix))
    qn = iid_power(q_x.probs, code.n)
    table = qn[:, None] * (enc @ dec.T) / code.M0
    return InducedJoint(code.n, table)


def synthesis_tv(code: SynthesisCode, q_x: Pmf, q_ygx: Channel) -> float:
    """TV between the induced joint and the i.i.d. target q_X q_{Y|X}."""
    p = exact_induced_joint(code, q_x).table
    t = product_target(q_x.probs[:, None] * q_ygx.matrix, code.n)
    return float(kernels.batch_tv(p.reshape(1, -1), t.ravel())[0])


def key_independence_tv(code: SynthesisCode, q_x: Pmf) -> float:
    """TV between the codebook-side joint of (X^n, K) and uniform(K) x q_X^n."""
    _check_exact(code)
    like = np.exp(_likelihoods(code, code.aux.p_x_given_u.matrix))
    ups = like.reshape(-1, code.M, code.M0).sum(axis=1) / (code.M * code.M0)
    target = iid_power(q_x.probs, code.n)[:, None] / code.M0 * np.ones((1, code.M0))
    return float(0.5 * np.abs(ups - target).sum())


@dataclass
class DecayTable:
    rows: list[tuple[int, float, float, int]] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        lines = ["n,mean_tv,std_tv,trials"]
        for n, m, s, t in self.rows:
            lines.append(f"{n},{fmt(m)},{fmt(s)},{t}")
        return "\n".join(lines) + "\n"

    def log_slope(self) -> float:
        """Least-squares slope of log(mean TV) against n."""
        ns = np.array([r[0] for r in self.rows], dtype=float)
        ms = np.array([r[1] for r in self.rows], dtype=float)
        return float(np.polyfit(ns, np.log(ms), 1)[0])


def _seed_list(seeds) -> list[int]:
    if isinstance(seeds, (int, np.integer)):
        return list(range(int(seeds)))
    return [int(s) for s in seeds]


def tv_decay_experiment(aux: AuxDecomposition, q_x: Pmf, q_ygx: Channel, rates: RatePoint,
                        n_list, seeds=20) -> DecayTable:
    """Mean and spread of synthesis_tv over fresh codebooks for each block length."""
    seeds = _seed_list(seeds)
    table = DecayTable(metadata={"R": rates.r, "R0": rates.r0, "seeds": seeds,
                                 "sizes": "M = ceil(2^(nR)), M0 = ceil(2^(nR0))"})
    for n in n_list:
        vals = [synthesis_tv(generate_code(aux, int(n), rates.r, rates.r0, s), q_x, q_ygx)
                for s in seeds]
        std = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
        table.rows.append((int(n), float(np.mean(vals)), std, len(vals)))
    return table


def _genuine(q_x: Pmf, q_ygx: Channel, n: int, rng) -> tuple[np.ndarray, np.ndarray]:
    x = rng.choice(len(q_x), size=n, p=q_x.probs)
    cum = np.cumsum(q_ygx.matrix, axis=1)[x]
    y = np.minimum((rng.random(n)[:, None] >= cum).sum(axis=1), cum.shape[1] - 1)
    return x, y


def _synthetic(code: SynthesisCode, q_x: Pmf, rng) -> tuple[np.ndarray, np.ndarray]:
    x = rng.choice(len(q_x), size=code.n, p=q_x.probs)
    k = int(rng.integers(code.M0))
    j = likelihood_encode(code, x, k, rng)
    return x, decode_sample(code, j, k, rng)


def sample_pairs(code: SynthesisCode, q_x: Pmf, trials: int, seed: int) -> np.ndarray:
    """Indices (x^n, y^n) in the exact table layout for sampled synthetic pairs."""
    nx, ny = len(code.x_alphabet), len(code.y_alphabet)
    out = np.empty((trials, 2), dtype=np.int64)
    for i in range(trials):
        x, y = _synthetic(code, q_x, rng_for("pipeline", seed, i))
        out[i] = seq_index(x, nx), seq_index(y, ny)
    return out


def _is_synthetic(verdict) -> bool:
    if isinstance(verdict, str):
        if verdict not in ("genuine", "synthetic"):
            raise ValueError(f"detector returned {verdict!r}")
        return verdict == "synthetic"
    return bool(verdict)


def detector_demo(code: SynthesisCode, q_x: Pmf, q_ygx: Channel,
                  detector: Callable, trials: int, seed: int = 0) -> tuple[float, float]:
    """Estimate (alpha, beta) of a detector; alpha flags genuine data as synthetic.

    Raises InvariantViolation if alpha + beta falls below 1 - TV by more
    than three standard errors.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    false_alarm = miss = 0
    for i in range(trials):
        x, y = _genuine(q_x, q_ygx, code.n, rng_for("detector-genuine", seed, i))
        false_alarm += _is_synthetic(detector(x, y))
        x, y = _synthetic(code, q_x, rng_for("detector-synthetic", seed, i))
        miss += not _is_synthetic(detector(x, y))
    alpha, beta = false_alarm / trials, miss / trials
    try:
        tv = synthesis_tv(code, q_x, q_ygx)
    except BudgetExceeded:
        return alpha, beta
    sigma = np.sqrt((alpha * (1 - alpha) + beta * (1 - beta)) / trials)
    if alpha + beta < 1 - tv - 3 * sigma - 1e-12:
        raise InvariantViolation(f"alpha + beta = {alpha + beta} below 1 - TV = {1 - tv}")
    return alpha, beta


def likelihood_ratio_detector(code: SynthesisCode, q_x: Pmf, q_ygx: Channel,
                              threshold: float = 1.0) -> Callable:
    """Flags synthetic when P(x^n, y^n) > threshold * target(x^n, y^n)."""
    p = exact_induced_joint(code, q_x).table
    t = product_target(q_x.probs[:, None] * q_ygx.matrix, code.n)
    nx, ny = len(code.x_alphabet), len(code.y_alphabet)

    def detect(x, y) -> str:
        i, j = seq_index(x, nx), seq_index(y, ny)
        return "synthetic" if p[i, j] > threshold * t[i, j] else "genuine"

    return detect


@dataclass(frozen=True)
class MonteCarloEstimate:
    value: float
    kind: str
    trials: int


def monte_carlo_tv(code: SynthesisCode, q_x: Pmf, q_ygx: Channel, trials: int, seed: int = 0,
                   detector: Callable | None = None) -> MonteCarloEstimate:
    """Plug-in TV estimate for n <= 4 (biased upward); else a detector lower bound."""
    if trials < 1:
        raise ValueError("trials must be positive")
    if code.n <= MC_MAX_N:
        emp = monte_carlo_joint(code, q_x, trials, seed).table
        t = product_target(q_x.probs[:, None] * q_ygx.matrix, code.n)
        return MonteCarloEstimate(float(0.5 * np.abs(emp - t).sum()), "plug-in", trials)
    if detector is None:
        raise BudgetExceeded("n > 4: plug-in estimation refused; supply a detector")
    alpha, beta = detector_demo(code, q_x, q_ygx, detector, trials, seed)
    return MonteCarloEstimate(max(1.0 - alpha - beta, 0.0), "detector-lower-bound", trials)


def monte_carlo_joint(code: SynthesisCode, q_x: Pmf, trials: int, seed: int = 0) -> InducedJoint:
    """Empirical induced joint from the encoder/decoder pipeline."""
    nx, ny = len(code.x_alphabet), len(code.y_alphabet)
    idx = sample_pairs(code, q_x, trials, seed)
    emp = np.zeros((nx ** code.n, ny ** code.n))
    np.add.at(emp, (idx[:, 0], idx[:, 1]), 1.0 / trials)
    return InducedJoint(code.n, emp, "monte-carlo", trials)


def witness_u_equals_y(q_x: Pmf, q_ygx: Channel) -> AuxDecomposition:
    """The decomposition U = Y, always valid for any target."""
    q = q_x.probs[:, None] * q_ygx.matrix
    qy = q.sum(axis=0)
    live = qy > 0
    px = (q[:, live] / qy[live]).T
    py = np.eye(q.shape[1])[live]
    return AuxDecomposition.from_arrays(qy[live], px, py, q_x.atoms, q_ygx.output_alphabet)
