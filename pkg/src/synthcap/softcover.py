"""Soft covering: induced outputs of codebooks, one-shot bounds and exponents."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from . import kernels
from .errors import AlphabetError, BudgetExceeded
from .prob import (Channel, JointPmf, Pmf, density_table, entropy_array, mutual_information,
                   renyi_bar_raw, renyi_information_raw)
from .regions.types import fmt
from .util import budget, ceil_pow2, check_budget, product_atoms, rng_for, sequences

EXHAUSTIVE = "exhaustive"
ALPHA_CAP = 64.0
ALPHA_PRIME_FLOOR = -8.0
TAU_GRID = 256
CHUNK = 1 << 14


@dataclass(frozen=True, eq=False)
class SoftCodebook:
    """Sequences u^n as rows of symbol indices; ``keys`` label rows when keyed."""

    n: int
    entries: np.ndarray
    keys: tuple | None = None

    def __post_init__(self):
        e = np.array(self.entries, dtype=np.int64).reshape(-1, self.n) if self.n else \
            np.zeros((len(self.entries), 0), dtype=np.int64)
        if e.shape[0] == 0:
            raise ValueError("codebook must be nonempty")
        if e.min() < 0:
            raise AlphabetError("negative symbol index")
        if self.keys is not None and len(self.keys) != e.shape[0]:
            raise ValueError("one key per entry")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def M(self) -> int:
        return self.entries.shape[0]


def _log(m) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(m, dtype=float))


def sequence_outputs(matrix: np.ndarray, seqs: np.ndarray) -> np.ndarray:
    """Rows prod_t W(v_t | s_t) over all v^n for each input sequence s."""
    n = seqs.shape[1]
    check_budget(float(seqs.shape[0]) * matrix.shape[1] ** n * max(n, 1), "output table")
    vseq = sequences(matrix.shape[1], n)
    return np.exp(kernels.sequence_loglik(np.ascontiguousarray(seqs), vseq, _log(matrix))).T


def _iid(p: np.ndarray, n: int) -> np.ndarray:
    out = np.ones(1)
    for _ in range(n):
        out = np.multiply.outer(out, p).ravel()
    return out


def induced_output(codebook: SoftCodebook, channel: Channel, weights: Pmf | None = None) -> Pmf:
    """sum_entries weight * prod_t W(v_t | u_t) as a Pmf over V^n."""
    if codebook.entries.max() >= len(channel.input_alphabet):
        raise AlphabetError("codeword symbol outside the channel input alphabet")
    w = np.full(codebook.M, 1.0 / codebook.M) if weights is None else weights.probs
    if w.size != codebook.M:
        raise ValueError("one weight per codebook entry")
    out = w @ sequence_outputs(channel.matrix, codebook.entries)
    return Pmf.from_probs(out, product_atoms([channel.output_alphabet] * codebook.n),
                          normalize=True)


def soft_cover_tv(codebook: SoftCodebook, channel: Channel, target: Pmf,
                  weights: Pmf | None = None) -> float:
    """TV between the induced output and the i.i.d. target."""
    if target.atoms != channel.output_alphabet:
        raise AlphabetError("target alphabet differs from the channel output")
    p = induced_output(codebook, channel, weights).probs
    return float(kernels.batch_tv(p[None, :], _iid(target.probs, codebook.n))[0])


def mixture_tv_stats(weights: np.ndarray, dists: np.ndarray, outputs: np.ndarray,
                     target: np.ndarray, trials, seed: int, tag: str) -> tuple[float, float]:
    """Mean and std of TV(sum_e weights[e] outputs[k_e], target), k_e ~ dists[e] independent.

    ``trials`` is a positive count for Monte Carlo or "exhaustive".
    """
    weights = np.asarray(weights, dtype=float)
    E, K = dists.shape
    if trials == EXHAUSTIVE:
        check_budget(float(K) ** E * outputs.shape[1], "exhaustive codebook enumeration")
        total = K ** E
        mean = sq = 0.0
        tvs, probs = [], []
        for start in range(0, total, CHUNK):
            idx = np.arange(start, min(start + CHUNK, total))
            digits = np.empty((idx.size, E), dtype=np.int64)
            rest = idx.copy()
            for e in range(E - 1, -1, -1):
                digits[:, e] = rest % K
                rest //= K
            prob = np.prod(dists[np.arange(E)[None, :], digits], axis=1)
            keep = prob > 0
            if not keep.any():
                continue
            digits, prob = digits[keep], prob[keep]
            induced = np.einsum("e,bed->bd", weights, outputs[digits])
            tvs.append(kernels.batch_tv(induced, target))
            probs.append(prob)
        tv, prob = np.concatenate(tvs), np.concatenate(probs)
        prob = prob / prob.sum()
        mean = float(prob @ tv)
        sq = float(prob @ (tv - mean) ** 2)
        return mean, float(np.sqrt(sq))
    trials = int(trials)
    if trials < 1:
        raise ValueError("trials must be positive or 'exhaustive'")
    check_budget(float(trials) * E * outputs.shape[1], "Monte Carlo codebooks")
    tv = np.empty(trials)
    cum = np.cumsum(dists, axis=1)
    for t in range(trials):
        rng = rng_for(tag, seed, t)
        draws = rng.random(E)
        k = np.minimum((draws[:, None] >= cum).sum(axis=1), K - 1)
        induced = weights @ outputs[k]
        tv[t] = kernels.batch_tv(induced[None, :], target)[0]
    std = float(np.std(tv, ddof=1)) if trials > 1 else 0.0
    return float(tv.mean()), std


def expected_tv(codebook_dist: Pmf, channel: Channel, M: int, n: int, trials,
                seed: int = 0) -> tuple[float, float]:
    """E over i.i.d. codebooks of TV(induced output, Phi_V^n)."""
    if trials != EXHAUSTIVE and int(trials) < 1:
        raise ValueError("trials must be positive or 'exhaustive'")
    if M < 1:
        raise ValueError("M must be positive")
    seqs = sequences(len(codebook_dist), n)
    outs = sequence_outputs(channel.matrix, seqs)
    pu = _iid(codebook_dist.probs, n)
    target = _iid(codebook_dist.probs @ channel.matrix, n)
    return mixture_tv_stats(np.full(M, 1.0 / M), np.tile(pu, (M, 1)), outs, target, trials,
                            seed, "expected_tv")


class Theorem2Bound(NamedTuple):
    p_atypical: float
    delta: float
    delta_relaxed: float


class Corollary1Bound(NamedTuple):
    p_atypical: float
    delta_prime: float
    bound: float


def _table(j) -> np.ndarray:
    return j.table if isinstance(j, JointPmf) else np.asarray(j, dtype=float)


def _theorem2_scores(t: np.ndarray):
    """Per-cell score i(wu;v) - i(w) and the weight 2^score, support only."""
    w, u, v = t.shape
    t2 = t.reshape(w * u, v)
    dens = density_table(t2).reshape(w, u, v)
    pw = t.sum(axis=(1, 2))
    with np.errstate(divide="ignore"):
        iw = -np.log2(pw)
    score = dens - iw[:, None, None]
    return score, t > 0


def theorem2_bound(joint, tau: float) -> Theorem2Bound:
    """Components of the one-shot bound for a joint over (W, U, V)."""
    t = _table(joint)
    if t.ndim != 3:
        raise ValueError("joint must have coordinates (W, U, V)")
    score, supp = _theorem2_scores(t)
    inside = supp & (score <= tau)
    p_out = min(float(t[supp & ~inside].sum()), 1.0)  # rounding can exceed 1
    pv = t.sum(axis=(0, 1))
    delta = 0.0
    for v in np.flatnonzero(pv > 0):
        cond = t[:, :, v] / pv[v]
        m = inside[:, :, v]
        inner = float((cond[m] * np.exp2(score[:, :, v][m])).sum())
        delta += pv[v] * np.sqrt(inner)
    return Theorem2Bound(p_out, float(0.5 * delta), float(0.5 * 2.0 ** (tau / 2)))


def corollary1_bound(joint_uv, M: int, tau: float) -> Corollary1Bound:
    """P(i(U;V) > tau) plus the 1/(2 sqrt M) term restricted to i(U;V) <= tau."""
    t = _table(joint_uv)
    dens = density_table(t)
    supp = t > 0
    inside = supp & (dens <= tau)
    p_out = min(float(t[supp & ~inside].sum()), 1.0)
    pv = t.sum(axis=0)
    acc = 0.0
    for v in np.flatnonzero(pv > 0):
        m = inside[:, v]
        inner = float((t[m, v] / pv[v] * np.exp2(dens[m, v])).sum())
        acc += pv[v] * np.sqrt(inner)
    dp = float(acc / (2.0 * np.sqrt(M)))
    return Corollary1Bound(p_out, dp, p_out + dp)


def _tau_candidates(values: np.ndarray) -> np.ndarray:
    """The bounds are step functions of tau that change only at attained
    densities, so those points (plus one below all of them) are exhaustive;
    a uniform grid over the range is included as well."""
    vals = np.unique(values[np.isfinite(values)])
    if vals.size == 0:
        return np.array([0.0])
    grid = np.linspace(vals.min(), vals.max(), TAU_GRID)
    return np.unique(np.concatenate([vals, grid, [vals.min() - 1.0]]))


def corollary1_min_bound(joint_uv, M: int) -> tuple[float, Corollary1Bound]:
    """Minimum over tau of the one-shot bound; returns (tau, components)."""
    t = _table(joint_uv)
    dens = density_table(t)[t > 0]
    best = None
    for tau in _tau_candidates(dens):
        b = corollary1_bound(t, M, float(tau))
        if best is None or b.bound < best[1].bound:
            best = (float(tau), b)
    return best


def theorem2_min_bound(joint) -> tuple[float, float]:
    """Minimum over tau of p_atypical + delta; returns (tau, bound)."""
    t = _table(joint)
    score, supp = _theorem2_scores(t)
    best = None
    for tau in _tau_candidates(score[supp]):
        b = theorem2_bound(t, float(tau))
        val = b.p_atypical + b.delta
        if best is None or val < best[1]:
            best = (float(tau), float(val))
    return best


@dataclass
class ExponentReport:
    rate: float
    i_uv: float
    renyi_curve: list = field(default_factory=list)
    gamma: float = 0.0
    gamma_hat: float = 0.0
    gamma_hathat: float = 0.0
    argmax_gamma: tuple = (1.0, 1.0)
    argmax_gamma_hat: float = 1.0
    argmax_gamma_hathat: float = 1.0
    gamma_hathat_capped: bool = False
    delta_i: float = 0.0
    caps: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"rate": self.rate, "i_uv": self.i_uv, "gamma": self.gamma,
                "gamma_hat": self.gamma_hat, "gamma_hathat": self.gamma_hathat,
                "argmax_gamma": {"alpha": self.argmax_gamma[0],
                                 "alpha_prime": self.argmax_gamma[1]},
                "argmax_gamma_hat": self.argmax_gamma_hat,
                "argmax_gamma_hathat": self.argmax_gamma_hathat,
                "gamma_hathat_capped": self.gamma_hathat_capped,
                "delta_i": self.delta_i, "caps": self.caps, "units": "bits per symbol",
                "renyi_curve": [list(r) for r in self.renyi_curve]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def curve_csv(self) -> str:
        lines = ["alpha,I_breve,I_bar"]
        lines += [",".join(fmt(v) for v in row) for row in self.renyi_curve]
        return "\n".join(lines) + "\n"


def _gamma_obj(R, ib, ibar, a, ap):
    den = 2 * a - ap
    if a <= 1.0 or den <= 0:
        return 0.0
    return (a - 1) / den * (R - ib + (ap - 1) * (ib - ibar))


def exponents(joint_uv, R: float) -> ExponentReport:
    """Exponents gamma, gamma_hat and gamma_hathat in bits per symbol."""
    if R < 0:
        raise ValueError("rate must be nonnegative")
    t = _table(joint_uv)
    i_uv = mutual_information(t)
    cache_b: dict = {}
    cache_bar: dict = {}

    def ib(a):
        a = float(a)
        if a not in cache_b:
            cache_b[a] = renyi_information_raw(t, a)
        return cache_b[a]

    def ibar(a):
        a = float(a)
        if a not in cache_bar:
            cache_bar[a] = renyi_bar_raw(t, a)
        return cache_bar[a]

    # gamma_hat: alpha in [1, 2]
    def g_hat(a):
        return (a - 1) / a * (R - ib(a)) if a > 1 else 0.0

    grid = np.linspace(1.0, 2.0, 201)
    vals = np.array([g_hat(a) for a in grid])
    a_hat = _refine_1d(g_hat, grid, vals, 1.0, 2.0)
    gh = max(g_hat(a_hat), 0.0)
    if gh == 0.0:
        a_hat = 1.0

    # gamma_hathat: alpha in [1, cap]
    def g_hh(a):
        return (a - 1) / (2 * a - 1) * (R - ib(a)) if a > 1 else 0.0

    grid2 = np.concatenate([[1.0], 1.0 + np.geomspace(1e-4, ALPHA_CAP - 1, 300)])
    vals2 = np.array([g_hh(a) for a in grid2])
    a_hh = _refine_1d(g_hh, grid2, vals2, 1.0, ALPHA_CAP)
    ghh = max(g_hh(a_hh), 0.0)
    if ghh == 0.0:
        a_hh = 1.0
    capped = a_hh >= ALPHA_CAP * (1 - 1e-6)

    # gamma: 2-D grid over (alpha, alpha') seeded with both restricted optima
    al = np.unique(np.concatenate([grid2[::5], [ALPHA_CAP, a_hat, a_hh]]))
    ap = np.unique(np.concatenate([np.linspace(ALPHA_PRIME_FLOOR, 2.0, 81), [1.0, a_hat]]))
    best = (0.0, 1.0, 1.0)
    for a in al:
        for b in ap:
            v = _gamma_obj(R, ib(a), ibar(b), a, b)
            if v > best[0]:
                best = (v, float(a), float(b))
    for a, b in ((a_hat, a_hat), (a_hh, 1.0)):
        v = _gamma_obj(R, ib(a), ibar(b), a, b)
        if v > best[0]:
            best = (v, float(a), float(b))
    if best[0] > 0:
        def neg(z):
            a = float(np.clip(z[0], 1.0, ALPHA_CAP))
            b = float(np.clip(z[1], ALPHA_PRIME_FLOOR, 2.0))
            return -_gamma_obj(R, renyi_information_raw(t, a), renyi_bar_raw(t, b), a, b)

        res = minimize(neg, [best[1], best[2]], method="Nelder-Mead",
                       options={"xatol": 1e-9, "fatol": 1e-13, "maxiter": 400})
        a = float(np.clip(res.x[0], 1.0, ALPHA_CAP))
        b = float(np.clip(res.x[1], ALPHA_PRIME_FLOOR, 2.0))
        v = -neg([a, b])
        if v > best[0]:
            best = (v, a, b)

    h = 1e-4
    d1 = (ib(1 + h) - i_uv) / h
    d2 = (ib(1 + 2 * h) - i_uv) / (2 * h)
    curve = [(float(a), ib(a), ibar(a)) for a in np.linspace(1.0, 2.0, 11)]
    return ExponentReport(float(R), i_uv, curve, max(best[0], 0.0), gh, ghh,
                          (best[1], best[2]), float(a_hat), float(a_hh), bool(capped),
                          float(2 * d1 - d2),
                          {"alpha_max": ALPHA_CAP, "alpha_prime_min": ALPHA_PRIME_FLOOR})


def _refine_1d(f, grid, vals, lo, hi) -> float:
    i = int(np.argmax(vals))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, len(grid) - 1)]
    if b <= a:
        return float(grid[i])
    res = minimize_scalar(lambda x: -f(x), bounds=(a, b), method="bounded",
                          options={"xatol": 1e-10})
    cand = float(np.clip(res.x, lo, hi))
    return cand if f(cand) >= vals[i] else float(grid[i])


def lemma2_bound(joint_uv, R: float, n: int) -> float:
    """(3/2) 2^{-gamma n}: the exponent is in bits, so the base is 2."""
    g = exponents(joint_uv, R).gamma
    return 1.5 * 2.0 ** (-g * n)


def source_encoder_sim(source_w: Pmf, codebook_dist: Pmf, channel: Channel, R: float,
                       r: float, n: int, trials, seed: int = 0,
                       codebook_given_w: Channel | None = None) -> float:
    """Mean TV when the codebook is keyed by (w^{rn}, j) and the source is used as index.

    With r = 1 the entries may be drawn from prod_t Phi_{U|W}(. | w_t)
    (``codebook_given_w``) provided its U marginal is ``codebook_dist``.
    """
    L = int(round(r * n))
    if abs(L - r * n) > 1e-9:
        raise ValueError("r * n must be an integer")
    M = ceil_pow2(n * R)
    wseqs = sequences(len(source_w), L)
    pw = _iid(source_w.probs, L)
    useqs = sequences(len(codebook_dist), n)
    outs = sequence_outputs(channel.matrix, useqs)
    pu = _iid(codebook_dist.probs, n)
    if codebook_given_w is not None:
        if L != n:
            raise ValueError("a conditional codebook needs r = 1")
        marg = source_w.probs @ codebook_given_w.matrix
        if np.abs(marg - codebook_dist.probs).max() > 1e-9:
            raise ValueError("conditional codebook does not reproduce codebook_dist")
        cond = np.exp(kernels.sequence_loglik(wseqs, useqs, _log(codebook_given_w.matrix)))
        rows = cond.T
    else:
        rows = np.tile(pu, (wseqs.shape[0], 1))
    dists = np.repeat(rows, M, axis=0)
    weights = np.repeat(pw / M, 1) if M == 1 else np.repeat(pw, M) / M
    live = weights > 0
    target = _iid(codebook_dist.probs @ channel.matrix, n)
    return mixture_tv_stats(weights[live], dists[live], outs, target, trials, seed,
                            "source_encoder")[0]


def _pair_channel(channel_v: Channel, nw: int, nu: int) -> np.ndarray:
    m = channel_v.matrix
    if m.shape[0] != nw * nu:
        raise AlphabetError("channel_v must be indexed by flattened (w, u) pairs")
    return m


def superposition_sim(p_w: Pmf, p_u_given_w: Channel, channel_v: Channel, R1: float, R2: float,
                      n: int, trials, seed: int = 0) -> float:
    """Mean TV of V^n for a two-layer (cloud and satellite) codebook."""
    nw, nu = len(p_w), len(p_u_given_w.output_alphabet)
    m = _pair_channel(channel_v, nw, nu)
    M1, M2 = ceil_pow2(n * R1), ceil_pow2(n * R2)
    pair = p_w.probs[:, None] * p_u_given_w.matrix
    target = _iid(pair.ravel() @ m, n)
    wseqs = sequences(nw, n)
    useqs = sequences(nu, n)
    pw = _iid(p_w.probs, n)
    cond = np.exp(kernels.sequence_loglik(wseqs, useqs, _log(p_u_given_w.matrix))).T
    zseqs = (wseqs[:, None, :] * nu + useqs[None, :, :]).reshape(-1, n)
    outs = sequence_outputs(m, zseqs).reshape(wseqs.shape[0], useqs.shape[0], -1)
    if trials == EXHAUSTIVE:
        ns = useqs.shape[0]
        check_budget(float(wseqs.shape[0]) * ns ** M2 * outs.shape[2], "cloud configurations")
        configs, probs = [], []
        for wi in range(wseqs.shape[0]):
            for sats in itertools.product(range(ns), repeat=M2):
                p = pw[wi] * np.prod(cond[wi, list(sats)])
                if p > 0:
                    configs.append(outs[wi, list(sats)].mean(axis=0))
                    probs.append(p)
        configs, probs = np.array(configs), np.array(probs)
        return mixture_tv_stats(np.full(M1, 1.0 / M1), np.tile(probs, (M1, 1)), configs,
                                target, EXHAUSTIVE, seed, "superposition")[0]
    trials = int(trials)
    if trials < 1:
        raise ValueError("trials must be positive or 'exhaustive'")
    tv = np.empty(trials)
    for t in range(trials):
        rng = rng_for("superposition", seed, t)
        wi = rng.choice(wseqs.shape[0], size=M1, p=pw)
        acc = np.zeros(outs.shape[2])
        for j1 in range(M1):
            ui = rng.choice(useqs.shape[0], size=M2, p=cond[wi[j1]])
            acc += outs[wi[j1], ui].sum(axis=0)
        tv[t] = kernels.batch_tv((acc / (M1 * M2))[None, :], target)[0]
    return float(tv.mean())


def empirical_conditional_mi(p_u_given_w: Channel, channel_v: Channel, w_seq) -> float:
    """I(U;V|W) under the empirical distribution of w_seq."""
    nw, nu = len(p_u_given_w.input_alphabet), len(p_u_given_w.output_alphabet)
    m = _pair_channel(channel_v, nw, nu).reshape(nw, nu, -1)
    w = np.asarray(w_seq, dtype=np.int64)
    freq = np.bincount(w, minlength=nw) / w.size
    total = 0.0
    for a in np.flatnonzero(freq):
        total += freq[a] * mutual_information(p_u_given_w.matrix[a][:, None] * m[a])
    return float(total)


def local_synthesis_sim(p_u_given_w: Channel, channel_v: Channel, R: float, w_seq,
                        trials, seed: int = 0) -> float:
    """Mean TV of V^n given a fixed w^n from its conditional i.i.d. target."""
    nw, nu = len(p_u_given_w.input_alphabet), len(p_u_given_w.output_alphabet)
    m = _pair_channel(channel_v, nw, nu).reshape(nw, nu, -1)
    w = np.asarray(w_seq, dtype=np.int64)
    n = w.size
    M = ceil_pow2(n * R)
    useqs = sequences(nu, n)
    prior = np.ones(useqs.shape[0])
    for t in range(n):
        prior *= p_u_given_w.matrix[w[t], useqs[:, t]]
    zseqs = w[None, :] * nu + useqs
    outs = sequence_outputs(m.reshape(nw * nu, -1), zseqs)
    target = np.ones(1)
    for t in range(n):
        target = np.multiply.outer(target, p_u_given_w.matrix[w[t]] @ m[w[t]]).ravel()
    return mixture_tv_stats(np.full(M, 1.0 / M), np.tile(prior, (M, 1)), outs, target, trials,
                            seed, "local_synthesis")[0]


def _weight_grid(M: int, steps: int) -> np.ndarray:
    pts = [c for c in itertools.product(range(1, steps + 1), repeat=M) if sum(c) == steps]
    return np.array(pts, dtype=float) / steps


def mean_resolvability_search(codebook_dist: Pmf, channel: Channel, target: Pmf, n: int,
                              entropy_budget: float, max_codewords: int = 4,
                              steps: int = 12) -> float:
    """Minimum TV over weighted codebooks with at most four distinct codewords
    and weight entropy at most ``entropy_budget`` (weights on a 1/steps grid)."""
    nu = len(codebook_dist)
    S = nu ** n
    if S > 64 or max_codewords > 4:
        raise BudgetExceeded("instance too large: need |U|^n <= 64 and M <= 4")
    seqs = sequences(nu, n)
    outs = sequence_outputs(channel.matrix, seqs)
    tgt = _iid(target.probs, n)
    best = np.inf
    for M in range(1, max_codewords + 1):
        wts = _weight_grid(M, steps) if M > 1 else np.ones((1, 1))
        ents = np.array([entropy_array(w) for w in wts])
        wts = wts[ents <= entropy_budget + 1e-12]
        if wts.size == 0:
            continue
        combos = np.array(list(itertools.combinations(range(S), M)), dtype=np.int64)
        check_budget(float(combos.shape[0]) * wts.shape[0] * outs.shape[1],
                     "mean-resolvability search", min(budget(), 1 << 28))
        for start in range(0, combos.shape[0], 512):
            block = outs[combos[start:start + 512]]
            induced = np.einsum("gm,bmd->bgd", wts, block).reshape(-1, outs.shape[1])
            best = min(best, float(kernels.batch_tv(induced, tgt).min()))
    return best
