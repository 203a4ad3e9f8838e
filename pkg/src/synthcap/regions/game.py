"""Payoff-rate tradeoff for a coordination game against an adversary.

The nested problem  max_P min_z E_P pi  s.t.  C(P) <= R  is solved in one
level: C(P) <= R holds exactly when some decomposition of P has
I(X,Y;U) <= R, so the search runs over decompositions with P left free.
The decomposition found certifies the rate of every point.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.optimize import minimize

from ..prob import LN2
from ..util import rng_for
from .optimizer import TINY, OptimizerConfig, _Chart
from .types import AuxDecomposition, GamePoint

MAX_ACTIONS = 4


def _payoff_array(payoff) -> np.ndarray:
    pi = np.asarray(payoff, dtype=float)
    if pi.ndim != 3:
        raise ValueError("payoff must be a table pi[x, y, z]")
    if any(s > MAX_ACTIONS for s in pi.shape):
        raise ValueError(f"strategy sets limited to {MAX_ACTIONS} actions each, got {pi.shape}")
    return pi


def _solve(pi: np.ndarray, rate: float, nu: int, rng, max_iters: int):
    nx, ny, nz = pi.shape
    cells = np.argwhere(np.ones((nx, ny), dtype=bool))
    chart = _Chart((nx, ny), np.ones((nu, nx), dtype=bool), [np.ones((nu, ny), dtype=bool)],
                   cells)
    pz = pi.reshape(nx * ny, nz)
    nzv = chart.nz

    def unpack(z):
        return chart.unpack(z[:nzv])

    def info(z):
        a, bs, ss = unpack(z)
        p = chart.recon(a, bs)
        lp = np.log(np.maximum(p, TINY))
        hp = -(p * lp).sum()
        hxu, gxa, hyu, gya, gyc = chart.entropies(a, bs, ss)
        val = (hp - hxu - hyu) / LN2
        jac = chart.jac(a, bs, ss)
        g = (-(lp + 1.0)) @ jac
        g = g - chart.grad_vec(gxa + gya, gyc)
        return val, g / LN2, p, jac

    def obj(z):
        return -z[-1]

    def obj_grad(z):
        g = np.zeros_like(z)
        g[-1] = -1.0
        return g

    def pay(z):
        a, bs, _ = unpack(z)
        return chart.recon(a, bs) @ pz - z[-1]

    def pay_jac(z):
        a, bs, ss = unpack(z)
        j = pz.T @ chart.jac(a, bs, ss)
        return np.hstack([j, -np.ones((nz, 1))])

    def mass(z):
        a, _, _ = unpack(z)
        return np.array([a.sum() - 1.0])

    def mass_jac(z):
        g = np.zeros((1, z.size))
        g[0, :chart.sizes[0]] = 1.0
        return g

    cons = [{"type": "eq", "fun": mass, "jac": mass_jac},
            {"type": "ineq", "fun": pay, "jac": pay_jac}]
    if nu > 1:
        def cap(z):
            return np.array([rate - info(z)[0]])

        def cap_jac(z):
            return np.concatenate([-info(z)[1], [0.0]])[None, :]

        cons.append({"type": "ineq", "fun": cap, "jac": cap_jac})

    a0 = rng.dirichlet(np.ones(nu * nx)).reshape(nu, nx)
    c0 = rng.dirichlet(np.ones(ny), size=nu)
    z0 = np.concatenate([chart.pack(a0, [c0]), [0.0]])
    z0[-1] = (chart.recon(a0, [c0]) @ pz).min()
    bounds = [(0.0, 1.0)] * chart.sizes[0] + [(1e-12, 1.0)] * chart.sizes[1] + \
             [(float(pi.min()) - 1.0, float(pi.max()) + 1.0)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = minimize(obj, z0, jac=obj_grad, constraints=cons, bounds=bounds, method="SLSQP",
                       options={"maxiter": max_iters, "ftol": 1e-12})
    z = np.clip(res.x, [b[0] for b in bounds], [b[1] for b in bounds])
    a, bs, _ = unpack(z)
    a = a / a.sum()
    return a, bs[0]


def _evaluate(pi, a, b):
    """Exact payoff and I(X,Y;U) of a decomposition."""
    w = a.sum(axis=1)
    ok = w > 1e-14
    wit = AuxDecomposition.from_arrays(w[ok], a[ok] / w[ok, None], b[ok])
    p = wit.joint_xy().table
    payoff = float(np.einsum("xy,xyz->z", p, pi).min())
    return payoff, wit.i_xy_u(), wit


def game_region(payoff, cfg: OptimizerConfig | None = None, rates=None,
                grid: int = 11) -> list[GamePoint]:
    """Upper concave boundary of achievable (rate, payoff) pairs."""
    cfg = cfg or OptimizerConfig()
    pi = _payoff_array(payoff)
    nx, ny, _ = pi.shape
    if rates is None:
        rates = np.linspace(0.0, np.log2(min(nx, ny)), grid)
    rates = sorted(float(r) for r in rates)
    raw = []
    for i, rate in enumerate(rates):
        nu = 1 if rate <= 1e-12 else nx * ny + 1
        best = -np.inf
        for r in range(cfg.restarts):
            rng = rng_for("game", cfg.seed, i, r)
            a, b = _solve(pi, rate, nu, rng, cfg.max_iters)
            val, info, _ = _evaluate(pi, a, b)
            if info <= rate + 1e-7 and val > best:
                best = val
        raw.append((rate, best))
    return concave_envelope(raw)


def concave_envelope(points) -> list[GamePoint]:
    """Nondecreasing upper concave envelope evaluated at the input rates."""
    pts = sorted(points)
    run, best = [], -np.inf
    for r, v in pts:
        best = max(best, v)
        run.append((r, best))
    hull: list[tuple[float, float]] = []
    for p in run:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) >= -1e-15:
                hull.pop()
            else:
                break
        hull.append(p)
    xs = np.array([h[0] for h in hull])
    ys = np.array([h[1] for h in hull])
    return [GamePoint(r, float(np.interp(r, xs, ys))) for r, _ in run]


def product_payoff_oracle(payoff, steps: int = 200) -> float:
    """Brute force max over independent strategies of min_z payoff (binary actions)."""
    pi = _payoff_array(payoff)
    if pi.shape[:2] != (2, 2):
        raise ValueError("oracle grid implemented for binary actions")
    g = np.linspace(0, 1, steps + 1)
    px = np.stack([1 - g, g], axis=1)
    vals = np.einsum("ix,jy,xyz->ijz", px, px, pi).min(axis=2)
    return float(vals.max())
