"""Closed-form regions and common informations for the example channels."""

from __future__ import annotations

import math

import numpy as np

from ..prob import binary_entropy
from .types import RatePoint, RegionBoundary

EDGE = 1e-12


def _h(p: float) -> float:
    return binary_entropy(min(max(p, 0.0), 1.0))


def _check_p(p: float) -> None:
    if not 0 < p < 1:
        raise ValueError(f"erasure probability must lie in (0, 1), got {p}")


def erasure_rstar(p: float) -> float:
    return min(2 * (1 - p), 1.0)


def erasure_sum_rate(p: float, r: float) -> float:
    """R0 + R bound on the erasure boundary parameterized by r."""
    return _h(p) + r * (1 - _h((1 - p) / r))


def erasure_common_information(p: float) -> float:
    _check_p(p)
    return 1.0 if p < 0.5 else _h(p)


def erasure_r0(p: float, rate: float) -> float:
    """Minimum R0 at communication rate R for the erasure channel (inf below 1-p)."""
    _check_p(p)
    rs = erasure_rstar(p)
    if rate < 1 - p - EDGE:
        return math.inf
    if rate <= rs:
        r = max(rate, 1 - p)
        return max(erasure_sum_rate(p, r) - r, 0.0)
    return max(erasure_sum_rate(p, rs) - rate, 0.0)


def erasure_region(p: float, r_samples) -> RegionBoundary:
    """Boundary points (r, R0) for r in [1-p, r*], closed by the R0 = 0 corner."""
    _check_p(p)
    rs = erasure_rstar(p)
    pts = []
    for r in sorted(float(v) for v in r_samples):
        if not 1 - p - EDGE <= r <= rs + EDGE:
            raise ValueError(f"r = {r} outside [{1 - p}, {rs}]")
        r = min(max(r, 1 - p), rs)
        pts.append(RatePoint(r, max(erasure_sum_rate(p, r) - r, 0.0)))
    corner = erasure_sum_rate(p, rs)
    if not pts or pts[-1].r0 > EDGE:
        pts.append(RatePoint(corner, 0.0))
    return RegionBoundary(pts, [None] * len(pts), [],
                          {"region": "erasure", "p": p, "r_star": rs,
                           "common_information": erasure_common_information(p)})


def reverse_erasure_region(p: float, r_samples) -> RegionBoundary:
    """Boundary points for the reverse erasure channel, r in [r*, 1]."""
    _check_p(p)
    rs = erasure_rstar(p)
    pts = []
    for r in sorted((float(v) for v in r_samples), reverse=True):
        if not rs - EDGE <= r <= 1 + EDGE:
            raise ValueError(f"r = {r} outside [{rs}, 1]")
        r = min(max(r, rs), 1.0)
        base = _h(p) - r * _h((1 - p) / r)
        rate = base + (1 - p)
        pts.append(RatePoint(rate, (base + r) - rate))
    corner = _h(p) - rs * _h((1 - p) / rs) + rs
    pts.append(RatePoint(corner, 0.0))
    pts.sort(key=lambda q: (q.r, -q.r0))
    return RegionBoundary(pts, [None] * len(pts), [],
                          {"region": "reverse-erasure", "p": p, "r_star": rs})


def scatter_corners(m: int) -> list[tuple[int, float, float]]:
    """(a, R, R0) for a in [ceil(m/2), m-1]."""
    if m < 3:
        raise ValueError("scatter channel needs m >= 3")
    out = []
    for a in range(math.ceil(m / 2), m):
        r = math.log2(m / a)
        total = math.log2(m * (m - 1) / (a * (m - a)))
        out.append((a, r, total - r))
    return out


def scatter_common_information(m: int) -> float:
    if m < 3:
        raise ValueError("scatter channel needs m >= 3")
    even = m + (m % 2)
    return 2 - math.log2(even / (even - 1))


def _lower_hull(points: list[tuple[float, float]]) -> list[tuple[float, float]]:
    pts = sorted(set(points))
    hull: list[tuple[float, float]] = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) <= 1e-15:
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


def scatter_region(m: int) -> RegionBoundary:
    """Convex hull of the scatter-channel corners plus the R0 = 0 intercept."""
    corners = scatter_corners(m)
    intercept = min(r + r0 for _, r, r0 in corners)
    pts = [(r, r0) for _, r, r0 in corners] + [(intercept, 0.0)]
    hull = _lower_hull(pts)
    keep = []
    for r, r0 in hull:
        if keep and r0 >= keep[-1].r0 - 1e-15:
            continue
        keep.append(RatePoint(r, r0))
    return RegionBoundary(keep, [None] * len(keep), [],
                          {"region": "scatter", "m": m,
                           "corners": [(a, r, r0) for a, r, r0 in corners],
                           "common_information": scatter_common_information(m)})


def scatter_target(m: int) -> np.ndarray:
    return (1 - np.eye(m)) / (m * (m - 1))
