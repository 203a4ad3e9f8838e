"""Rate regions computed by optimizing over auxiliary decompositions."""

from __future__ import annotations

import numpy as np

from ..errors import InvariantViolation, InfeasibleError
from ..prob import Channel, JointPmf, Pmf, entropy_array, mutual_information
from ..util import set_partitions
from .optimizer import (RATE_SLACK, Candidate, OptimizerConfig, Problem, accept, best_under,
                        canonical_candidates, run_restarts)
from .types import RatePoint, RegionBoundary

PARTITION_LIMIT = 8
MARKOV_TOL = 1e-12


def _target(q_x: Pmf, q_ygx: Channel) -> np.ndarray:
    return q_x.probs[:, None] * q_ygx.matrix


def _table(q) -> np.ndarray:
    if isinstance(q, JointPmf):
        return q.table
    return np.asarray(q, dtype=float)


def necessary_partition(q_xy) -> tuple[float, np.ndarray]:
    """Minimum H(f(Y)|X) over maps f with X - f(Y) - Y, and the best f as labels."""
    q = _table(q_xy)
    if q.ndim != 2:
        q = q.reshape(q.shape[0], -1)
    qy = q.sum(axis=0)
    live = np.flatnonzero(qy > 0)
    if live.size > PARTITION_LIMIT:
        raise InfeasibleError(f"|Y| = {live.size} exceeds the partition search limit "
                              f"{PARTITION_LIMIT}")
    hx = entropy_array(q.sum(axis=1))
    best, best_f = np.inf, None
    for part in set_partitions(list(live)):
        cols = np.stack([q[:, block].sum(axis=1) for block in part], axis=1)
        pc = cols.sum(axis=0)
        markov = True
        for c, block in enumerate(part):
            lhs = q[:, block] * pc[c]
            rhs = np.outer(cols[:, c], qy[block])
            if np.abs(lhs - rhs).max() > MARKOV_TOL:
                markov = False
                break
        if not markov:
            continue
        val = entropy_array(cols) - hx
        if val < best - 1e-15:
            best = val
            f = np.zeros(q.shape[1], dtype=int)
            for c, block in enumerate(part):
                f[block] = c
            best_f = f
    return max(best, 0.0), best_f


def necessary_conditional_entropy(q_xy) -> float:
    """H(Y dagger X) in bits by exhaustive partition search over Y."""
    return necessary_partition(q_xy)[0]


def _partition_candidate(prob: Problem, tol: float) -> Candidate | None:
    """Witness U = f*(Y) for the optimal necessary-entropy partition."""
    if prob.m != 1 or np.count_nonzero(prob.q.sum(axis=0)) > PARTITION_LIMIT:
        return None
    q = prob.q
    _, f = necessary_partition(q)
    k = f.max() + 1
    qy = q.sum(axis=0)
    a = np.stack([q[:, f == c].sum(axis=1) for c in range(k)])
    b = np.zeros((k, q.shape[1]))
    for c in range(k):
        b[c, f == c] = qy[f == c] / qy[f == c].sum()
    return accept(prob, a, [b], tol)


class _Pool:
    """Candidate witnesses shared by every point of one region computation."""

    def __init__(self, q_full, cfg: OptimizerConfig, label: str):
        self.prob = Problem.build(q_full)
        self.cfg = cfg
        self.label = label
        self.items: list[Candidate] = canonical_candidates(self.prob, cfg.tol)
        part = _partition_candidate(self.prob, cfg.tol)
        if part is not None:
            self.items.append(part)
        q2 = self.prob.q.reshape(self.prob.q.shape[0], -1)
        self.i_xy = mutual_information(q2)
        self.items += run_restarts(self.prob, cfg, f"{label}:free")
        for mu in cfg.mu_grid:
            self.items += run_restarts(self.prob, cfg, f"{label}:mu={mu!r}", mu=mu)
        self.capped: list[float] = []

    @property
    def common_information(self) -> Candidate:
        return min(self.items, key=lambda c: (c.i_xy_u, c.i_x_u))

    def at(self, rate: float) -> Candidate | None:
        """Best witness with I(X;U) <= rate, running capped restarts when needed."""
        if rate < self.i_xy - RATE_SLACK:
            return None
        best = best_under(self.items, rate)
        floor = self.common_information.i_xy_u
        active = best is None or best.i_xy_u > floor + 1e-12
        if active and rate > self.i_xy + 1e-6:
            self.items += run_restarts(self.prob, self.cfg, f"{self.label}:cap={rate!r}",
                                       rate_cap=rate)
            self.capped.append(rate)
            best = best_under(self.items, rate)
        return best

    def metadata(self) -> dict:
        return {"optimizer": self.cfg.to_dict(), "aux_cardinality": self.prob.nu,
                "restarts": self.cfg.restarts, "candidates": len(self.items),
                "i_xy": self.i_xy, "common_information": self.common_information.i_xy_u,
                "frontier": "epsilon-constraint on I(X;U) with shared candidate pool",
                "capped_rates": list(self.capped)}


def _default_grid(pool: _Pool, n: int = 10, hi: float | None = None) -> list[float]:
    """Rates from I(X;Y) up to where the sum-rate bound stops binding."""
    hi = pool.common_information.i_xy_u if hi is None else hi
    return [float(r) for r in np.linspace(pool.i_xy, max(hi, pool.i_xy), n)]


def _grid(pool: _Pool, r_grid) -> list[float]:
    """None gives the default ten rates, an int that many evenly spaced rates."""
    if r_grid is None:
        return _default_grid(pool)
    if isinstance(r_grid, (int, np.integer)):
        if r_grid < 1:
            raise ValueError("grid needs at least one rate")
        return _default_grid(pool, int(r_grid))
    return [float(r) for r in r_grid]


def _sum_rate_region(pool: _Pool, r_grid, scale: float = 1.0, label: str = "") -> RegionBoundary:
    points, wits, bad = [], [], []
    for r in sorted(float(v) for v in r_grid):
        c = pool.at(r)
        if c is None:
            bad.append(r)
            continue
        points.append(RatePoint(r, max(scale * c.i_xy_u - r, 0.0)))
        wits.append(c.witness)
    meta = pool.metadata()
    meta["region"] = label
    if bad:
        meta["note"] = "rates below I(X;Y) are unattainable"
    return RegionBoundary(points, wits, bad, meta)


def synthesis_region(q_x: Pmf, q_ygx: Channel, r_grid=None,
                     cfg: OptimizerConfig | None = None) -> RegionBoundary:
    """Lower boundary R0(R) = min over decompositions of max(I(X,Y;U) - R, 0)."""
    cfg = cfg or OptimizerConfig()
    pool = _Pool(_target(q_x, q_ygx), cfg, "synthesis")
    grid = _grid(pool, r_grid)
    return _sum_rate_region(pool, grid, 1.0, "synthesis")


def limited_memory_region(q_x: Pmf, q_ygx: Channel, b: float, r_grid=None,
                          cfg: OptimizerConfig | None = None) -> RegionBoundary:
    """Sum-rate constraint R0 + R >= b I(X,Y;U) for a memory fraction b."""
    if not 0 <= b <= 1:
        raise ValueError("memory fraction b must lie in [0, 1]")
    cfg = cfg or OptimizerConfig()
    pool = _Pool(_target(q_x, q_ygx), cfg, "synthesis")
    grid = _grid(pool, r_grid)
    out = _sum_rate_region(pool, grid, float(b), "limited-memory")
    out.metadata["b"] = float(b)
    return out


def broadcast_region(q_x: Pmf, q_ys_gx: Channel, receiver_sizes=None, r_grid=None,
                     cfg: OptimizerConfig | None = None) -> RegionBoundary:
    """Region with receivers Y_1..Y_m conditionally independent given U.

    ``q_ys_gx`` maps X onto the flattened product Y_1 x ... x Y_m (row-major)
    and ``receiver_sizes`` gives |Y_i|; omitted means a single receiver.
    """
    cfg = cfg or OptimizerConfig()
    q = _target(q_x, q_ys_gx)
    if receiver_sizes is not None:
        sizes = tuple(int(s) for s in receiver_sizes)
        if int(np.prod(sizes)) != q.shape[1]:
            raise ValueError("receiver sizes do not match the output alphabet")
        q = q.reshape((q.shape[0],) + sizes)
    label = "synthesis" if q.ndim == 2 else "broadcast"
    pool = _Pool(q, cfg, label)
    grid = _grid(pool, r_grid)
    out = _sum_rate_region(pool, grid, 1.0, "broadcast")
    out.metadata["receivers"] = q.ndim - 1
    return out


def public_channel_region(q_x: Pmf, q_ygx: Channel, cfg: OptimizerConfig | None = None,
                          grid: int = 10) -> RegionBoundary:
    """Frontier of witness pairs (I(X;U), I(X,Y;U)) when the message is public."""
    cfg = cfg or OptimizerConfig()
    pool = _Pool(_target(q_x, q_ygx), cfg, "synthesis")
    seen = {}
    for r in _default_grid(pool, grid, pool.common_information.i_x_u):
        c = pool.at(r)
        if c is not None:
            seen[(round(c.i_x_u, 12), round(c.i_xy_u, 12))] = c
    items = sorted(seen.values(), key=lambda c: (c.i_x_u, c.i_xy_u))
    points, wits = [], []
    for c in items:
        if points and c.i_xy_u >= points[-1].r0 - 1e-12:
            continue
        if c.i_xy_u < c.i_x_u - 1e-9:
            raise InvariantViolation("public-channel point with R0 < R")
        points.append(RatePoint(c.i_x_u, max(c.i_xy_u, c.i_x_u)))
        wits.append(c.witness)
    meta = pool.metadata()
    meta["region"] = "public-channel"
    return RegionBoundary(points, wits, [], meta)


def local_randomness_region(q_x: Pmf, q_ygx: Channel, grid=None,
                            cfg: OptimizerConfig | None = None,
                            identity_tol: float = 1e-6) -> RegionBoundary:
    """Tight triples (I(X;U), I(X,Y;U) - I(X;U), H(Y|U)) along the frontier.

    On every such triple R0 + R_L = H(Y|X); a larger gap raises.
    """
    cfg = cfg or OptimizerConfig()
    q = _target(q_x, q_ygx)
    pool = _Pool(q, cfg, "synthesis")
    if grid is None or isinstance(grid, int):
        rates = _default_grid(pool, grid or 10)
    else:
        rates = grid
    h_y_x = entropy_array(q) - entropy_array(q.sum(axis=1))
    chosen = {}
    for c in [pool.at(r) for r in rates] + canonical_candidates(pool.prob, cfg.tol)[:1]:
        if c is None:
            continue
        chosen[(round(c.i_x_u, 12), round(c.i_xy_u, 12))] = c
    points, wits = [], []
    for c in sorted(chosen.values(), key=lambda c: (c.i_x_u, c.i_xy_u)):
        r0 = max(c.i_xy_u - c.i_x_u, 0.0)
        rl = c.witness.h_y_given_u()
        if abs(r0 + rl - h_y_x) > identity_tol:
            raise InvariantViolation(f"R0 + R_L = {r0 + rl} differs from H(Y|X) = {h_y_x}")
        points.append(RatePoint(c.i_x_u, r0, rl))
        wits.append(c.witness)
    meta = pool.metadata()
    meta["region"] = "local-randomness"
    meta["h_y_given_x"] = h_y_x
    return RegionBoundary(points, wits, [], meta)


def wyner_common_information(q_xy, cfg: OptimizerConfig | None = None):
    """Minimum I(X,Y;U) over X - U - Y; returns (bits, witness)."""
    cfg = cfg or OptimizerConfig()
    pool = _Pool(_table(q_xy), cfg, "synthesis")
    best = pool.common_information
    return best.i_xy_u, best.witness
