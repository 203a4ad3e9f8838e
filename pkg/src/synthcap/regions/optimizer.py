"""Search over auxiliary decompositions X - U - (Y_1, ..., Y_m).

The target constraint sum_u p(u,x) prod_i p(y_i|u) = q(x, y) is bilinear, so
it is imposed exactly with SLSQP rather than through a penalty.  Every label
u is confined to a maximal box S_x x S_y1 x ... inside supp(q): any feasible
decomposition has this form, and fixing the boxes per restart removes the
complementarity that otherwise stalls the solver at the boundary of the
simplex.  Restarts draw fresh boxes and starting points.
"""

from __future__ import annotations

import itertools
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.optimize import minimize, nnls

from ..errors import InvalidDistribution
from ..prob import LN2, entropy_array
from ..util import rng_for
from .types import AuxDecomposition

TINY = 1e-300
RATE_SLACK = 1e-9


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings shared by every region computation."""

    restarts: int = 32
    mu_grid: tuple[float, ...] = ()
    max_iters: int = 500
    seed: int = 0
    tol: float = 1e-6
    workers: int = 1

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be positive")
        object.__setattr__(self, "mu_grid", tuple(float(m) for m in self.mu_grid))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mu_grid"] = list(self.mu_grid)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "OptimizerConfig":
        known = {k: d[k] for k in ("restarts", "mu_grid", "max_iters", "seed", "tol", "workers")
                 if k in d}
        return cls(**known)

    def replace(self, **kw) -> "OptimizerConfig":
        d = asdict(self)
        d.update(kw)
        return OptimizerConfig(**d)


def max_boxes(supp: np.ndarray, limit: int = 1 << 16) -> list[tuple[tuple[int, ...], ...]]:
    """Maximal product sets S_0 x ... x S_m contained in a boolean support."""
    supp = np.asarray(supp, dtype=bool)
    k = supp.ndim
    last = int(np.argmax(supp.shape))
    others = [i for i in range(k) if i != last]
    if np.prod([2.0 ** supp.shape[i] for i in others]) > limit:
        return [tuple(tuple(range(s)) for s in supp.shape)]

    def subsets(n):
        return [c for r in range(1, n + 1) for c in itertools.combinations(range(n), r)]

    def fits(box):
        return bool(supp[np.ix_(*box)].all())

    found = set()
    for choice in itertools.product(*(subsets(supp.shape[i]) for i in others)):
        box = [None] * k
        for i, c in zip(others, choice):
            box[i] = c
        cand = []
        for y in range(supp.shape[last]):
            box[last] = (y,)
            if fits(box):
                cand.append(y)
        if not cand:
            continue
        box[last] = tuple(cand)
        changed = True
        while changed:
            changed = False
            for i in range(k):
                grown = []
                for a in range(supp.shape[i]):
                    trial = list(box)
                    trial[i] = (a,)
                    if fits(trial):
                        grown.append(a)
                if tuple(grown) != box[i]:
                    box[i] = tuple(grown)
                    changed = True
        found.add(tuple(box))
    return sorted(found)


@dataclass
class Problem:
    """A target tensor reduced to its support, plus chart data."""

    q: np.ndarray
    keep: list
    full_shape: tuple
    nu: int
    boxes: list = field(default_factory=list)

    @classmethod
    def build(cls, q_full, nu: int | None = None) -> "Problem":
        q_full = np.asarray(q_full, dtype=float)
        if q_full.ndim < 2:
            raise InvalidDistribution("target needs an input and at least one output axis")
        if np.any(q_full < 0) or abs(q_full.sum() - 1) > 1e-9:
            raise InvalidDistribution("target is not a pmf")
        keep = []
        for ax in range(q_full.ndim):
            other = tuple(i for i in range(q_full.ndim) if i != ax)
            keep.append(np.flatnonzero(q_full.sum(axis=other) > 0))
        q = q_full[np.ix_(*keep)]
        q = q / q.sum()
        if nu is None:
            nu = int(np.prod(q_full.shape)) + 1
        return cls(q, keep, q_full.shape, nu, max_boxes(q > 0))

    @property
    def m(self) -> int:
        return self.q.ndim - 1

    def witness(self, a: np.ndarray, bs: list) -> AuxDecomposition:
        """Expand reduced arrays p(u,x), p(y_i|u) to a full-alphabet witness."""
        w = a.sum(axis=1)
        ok = w > 1e-14
        a, w = a[ok], w[ok]
        bs = [b[ok] for b in bs]
        px = np.zeros((a.shape[0], self.full_shape[0]))
        px[:, self.keep[0]] = a / w[:, None]
        py = np.ones((a.shape[0], 1))
        for i, b in enumerate(bs):
            full = np.zeros((a.shape[0], self.full_shape[i + 1]))
            full[:, self.keep[i + 1]] = b / b.sum(axis=1, keepdims=True)
            py = (py[:, :, None] * full[:, None, :]).reshape(a.shape[0], -1)
        sizes = tuple(self.full_shape[1:]) if self.m > 1 else None
        return AuxDecomposition.from_arrays(w, px, py, receiver_sizes=sizes)

    def canonical(self) -> list[tuple[np.ndarray, list]]:
        """Decompositions that are always feasible: U = Y, U = X, constant U."""
        q = self.q
        out = []
        qy = q.sum(axis=0)
        ys = np.argwhere(qy > 0)
        a = np.stack([q[(slice(None),) + tuple(y)] for y in ys])
        bs = []
        for i in range(self.m):
            b = np.zeros((len(ys), q.shape[i + 1]))
            b[np.arange(len(ys)), ys[:, i]] = 1.0
            bs.append(b)
        out.append((a, bs))
        qx = q.sum(axis=tuple(range(1, q.ndim)))
        cond = q / qx.reshape((-1,) + (1,) * self.m)
        margs = [cond.sum(axis=tuple(j for j in range(1, q.ndim) if j != i + 1))
                 for i in range(self.m)]
        prod = margs[0]
        for mg in margs[1:]:
            prod = (prod[:, :, None] * mg[:, None, :]).reshape(prod.shape[0], -1)
        if np.abs(prod - cond.reshape(cond.shape[0], -1)).max() < 1e-12:
            out.append((np.diag(qx), margs))
        outs = [q.sum(axis=tuple(j for j in range(q.ndim) if j != i + 1)) for i in range(self.m)]
        full = qx.reshape((-1,) + (1,) * self.m)
        for i, o in enumerate(outs):
            shape = [1] * q.ndim
            shape[i + 1] = -1
            full = full * o.reshape(shape)
        if np.abs(full - q).max() < 1e-12:
            out.append((qx[None, :], [o[None, :] for o in outs]))
        return out


class _Chart:
    """Variables of one restart: masked p(u,x) and unnormalized p(y_i|u)."""

    def __init__(self, shape, masks_a, masks_b, cells):
        self.shape = shape
        self.nu = masks_a.shape[0]
        self.ai = np.flatnonzero(masks_a.ravel())
        self.bi = [np.flatnonzero(mb.ravel()) for mb in masks_b]
        self.sizes = [self.ai.size] + [b.size for b in self.bi]
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)])
        self.cells = cells
        self.masks_b = masks_b

    @property
    def nz(self) -> int:
        return int(self.offsets[-1])

    def unpack(self, z):
        nu, nx = self.nu, self.shape[0]
        a = np.zeros(nu * nx)
        a[self.ai] = z[:self.offsets[1]]
        a = a.reshape(nu, nx)
        bs, ss = [], []
        for i, idx in enumerate(self.bi):
            ny = self.shape[i + 1]
            c = np.zeros(nu * ny)
            c[idx] = z[self.offsets[i + 1]:self.offsets[i + 2]]
            c = c.reshape(nu, ny)
            s = np.maximum(c.sum(axis=1), TINY)
            bs.append(c / s[:, None])
            ss.append(s)
        return a, bs, ss

    def pack(self, a, cs) -> np.ndarray:
        parts = [a.ravel()[self.ai]] + [c.ravel()[idx] for c, idx in zip(cs, self.bi)]
        return np.concatenate(parts)

    def _prodb(self, bs, skip=None):
        cx = self.cells[:, 0]
        out = np.ones((cx.size, self.nu))
        for i, b in enumerate(bs):
            if i != skip:
                out *= b[:, self.cells[:, i + 1]].T
        return out

    def recon(self, a, bs) -> np.ndarray:
        """Reconstructed joint on the listed cells."""
        return (a[:, self.cells[:, 0]].T * self._prodb(bs)).sum(axis=1)

    def jac(self, a, bs, ss) -> np.ndarray:
        nc, nu, nx = self.cells.shape[0], self.nu, self.shape[0]
        rows = np.arange(nc)
        cx = self.cells[:, 0]
        ja = np.zeros((nc, nu, nx))
        ja[rows, :, cx] = self._prodb(bs)
        blocks = [ja.reshape(nc, -1)[:, self.ai]]
        for i, (b, s) in enumerate(zip(bs, ss)):
            ny = self.shape[i + 1]
            cy = self.cells[:, i + 1]
            other = a[:, cx].T * self._prodb(bs, skip=i) / s[None, :]
            jc = -(other * b[:, cy].T)[:, :, None] * np.ones((1, 1, ny))
            jc[rows, :, cy] += other
            blocks.append(jc.reshape(nc, -1)[:, self.bi[i]])
        return np.hstack(blocks)

    def entropies(self, a, bs, ss):
        """H(X|U) and sum_i H(Y_i|U) in nats, with gradients in z."""
        w = a.sum(axis=1)
        la = np.log(np.maximum(a, TINY))
        lw = np.log(np.maximum(w, TINY))
        hxu = -(a * la).sum() + (w * lw).sum()
        g_hxu_a = lw[:, None] - la
        hyu = 0.0
        g_hyu_a = np.zeros_like(a)
        g_hyu_c = []
        for b, s in zip(bs, ss):
            lb = np.log(np.maximum(b, TINY))
            hb = -(b * lb).sum(axis=1)
            hyu += (w * hb).sum()
            g_hyu_a += hb[:, None]
            gb = -w[:, None] * (lb + 1.0)
            g_hyu_c.append((gb - (gb * b).sum(axis=1)[:, None]) / s[:, None])
        return hxu, g_hxu_a, hyu, g_hyu_a, g_hyu_c

    def grad_vec(self, ga, gcs) -> np.ndarray:
        return self.pack(ga, gcs)


def _make_chart(prob: Problem, rng: np.random.Generator, cells: np.ndarray,
                full_masks: bool = False) -> _Chart:
    nu, shape = prob.nu, prob.q.shape
    if full_masks or not prob.boxes:
        boxes = [tuple(tuple(range(s)) for s in shape)]
    else:
        boxes = prob.boxes
    order = list(rng.permutation(len(boxes)))[:nu]
    while len(order) < nu:
        order.append(int(rng.integers(len(boxes))))
    masks_a = np.zeros((nu, shape[0]), dtype=bool)
    masks_b = [np.zeros((nu, s), dtype=bool) for s in shape[1:]]
    for u, k in enumerate(order):
        box = boxes[k]
        masks_a[u, list(box[0])] = True
        for i in range(len(shape) - 1):
            masks_b[i][u, list(box[i + 1])] = True
    return _Chart(shape, masks_a, masks_b, cells)


def _initial_point(prob: Problem, chart: _Chart, rng, mix: float = 0.5):
    nu, q = prob.nu, prob.q
    bs = []
    for mb in chart.masks_b:
        b = np.zeros(mb.shape)
        for u in range(nu):
            idx = np.flatnonzero(mb[u])
            b[u, idx] = rng.dirichlet(np.ones(idx.size))
        bs.append(b)
    prodb = np.ones((nu, 1))
    for b in bs:
        prodb = (prodb[:, :, None] * b[:, None, :]).reshape(nu, -1)
    masks_a = np.zeros((nu, q.shape[0]), dtype=bool)
    masks_a.ravel()[chart.ai] = True
    a = np.zeros((nu, q.shape[0]))
    qf = q.reshape(q.shape[0], -1)
    for x in range(q.shape[0]):
        us = np.flatnonzero(masks_a[:, x])
        if us.size:
            sol, _ = nnls(prodb[us].T, qf[x])
            a[us, x] = sol
    ar = masks_a * rng.random(masks_a.shape)
    ar /= max(ar.sum(), TINY)
    a = (1 - mix) * a + mix * ar
    return chart.pack(a, bs)


def solve_restart(prob: Problem, rng: np.random.Generator, rate_cap: float | None,
                  mu: float, max_iters: int):
    """One SLSQP run; returns reduced arrays (a, bs) or None."""
    q = prob.q
    supp = q > 0
    cells = np.argwhere(supp)
    target = q[supp]
    chart = _make_chart(prob, rng, cells)
    hq = entropy_array(q) * LN2
    hx = entropy_array(q.sum(axis=tuple(range(1, q.ndim)))) * LN2

    def pieces(z):
        a, bs, ss = chart.unpack(z)
        return a, bs, ss, chart.entropies(a, bs, ss)

    def f(z):
        a, bs, ss, (hxu, _, hyu, _, _) = pieces(z)
        return (hq - hxu - hyu + mu * (hx - hxu)) / LN2

    def g(z):
        a, bs, ss, (hxu, gxa, hyu, gya, gyc) = pieces(z)
        ga = -(1 + mu) * gxa - gya
        gcs = [-c for c in gyc]
        return chart.grad_vec(ga, gcs) / LN2

    def ceq(z):
        a, bs, _ = chart.unpack(z)
        return chart.recon(a, bs) - target

    def ceq_jac(z):
        a, bs, ss = chart.unpack(z)
        return chart.jac(a, bs, ss)

    cons = [{"type": "eq", "fun": ceq, "jac": ceq_jac}]
    if rate_cap is not None:
        def cin(z):
            a, bs, ss, (hxu, *_rest) = pieces(z)
            return np.array([rate_cap - (hx - hxu) / LN2])

        def cin_jac(z):
            a, bs, ss, (hxu, gxa, *_rest) = pieces(z)
            return (chart.grad_vec(gxa, [np.zeros_like(b) for b in bs]) / LN2)[None, :]

        cons.append({"type": "ineq", "fun": cin, "jac": cin_jac})

    z0 = _initial_point(prob, chart, rng)
    bounds = [(0.0, 1.0)] * chart.sizes[0] + [(1e-12, 1.0)] * (chart.nz - chart.sizes[0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = minimize(f, z0, jac=g, constraints=cons, bounds=bounds, method="SLSQP",
                       options={"maxiter": max_iters, "ftol": 1e-12})
    z = np.clip(res.x, [b[0] for b in bounds], [b[1] for b in bounds])
    a, bs, _ = chart.unpack(z)
    if not np.all(np.isfinite(a)) or a.sum() <= 0:
        return None
    return a, bs


def _job(args):
    prob, key, rate_cap, mu, max_iters = args
    return solve_restart(prob, rng_for(*key), rate_cap, mu, max_iters)


@dataclass(frozen=True, eq=False)
class Candidate:
    i_x_u: float
    i_xy_u: float
    witness: AuxDecomposition


def run_restarts(prob: Problem, cfg: OptimizerConfig, tag: str,
                 rate_cap: float | None = None, mu: float = 0.0,
                 restarts: int | None = None) -> list[Candidate]:
    """All accepted restarts of one scalarized or rate-capped problem."""
    n = cfg.restarts if restarts is None else restarts
    jobs = [(prob, ("regions", cfg.seed, tag, r), rate_cap, mu, cfg.max_iters) for r in range(n)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            results = list(ex.map(_job, jobs))
    else:
        results = [_job(j) for j in jobs]
    out = []
    for res in results:
        if res is None:
            continue
        cand = accept(prob, *res, cfg.tol, rate_cap)
        if cand is not None:
            out.append(cand)
    return out


def accept(prob: Problem, a, bs, tol: float, rate_cap: float | None = None) -> Candidate | None:
    """Validate a raw solution; None unless feasible within tolerance."""
    try:
        wit = prob.witness(a, bs)
    except (InvalidDistribution, FloatingPointError, ValueError):
        return None
    q_full = np.zeros(prob.full_shape)
    q_full[np.ix_(*prob.keep)] = prob.q
    if wit.feasibility(q_full.reshape(prob.full_shape[0], -1)) >= tol:
        return None
    ixu = wit.i_x_u()
    if rate_cap is not None and ixu > rate_cap + RATE_SLACK:
        return None
    return Candidate(ixu, wit.i_xy_u(), wit)


def canonical_candidates(prob: Problem, tol: float) -> list[Candidate]:
    out = []
    for a, bs in prob.canonical():
        c = accept(prob, a, bs, tol)
        if c is not None:
            out.append(c)
    return out


def best_under(pool: list[Candidate], rate: float) -> Candidate | None:
    """Smallest I(XY;U) among candidates with I(X;U) <= rate (ties: smaller I(X;U))."""
    ok = [c for c in pool if c.i_x_u <= rate + RATE_SLACK]
    if not ok:
        return None
    return min(ok, key=lambda c: (round(c.i_xy_u, 12), c.i_x_u))
