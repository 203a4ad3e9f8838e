"""Rate points, boundaries and auxiliary decompositions."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidDistribution
from ..prob import Channel, JointPmf, Pmf, entropy_array, total_variation


@dataclass(frozen=True)
class RatePoint:
    """Rates in bits per symbol."""

    r: float
    r0: float
    r_l: float | None = None

    def __post_init__(self):
        for name in ("r", "r0", "r_l"):
            v = getattr(self, name)
            if v is not None and v < -1e-12:
                raise InvalidDistribution(f"{name} = {v} is negative")


@dataclass(frozen=True)
class GamePoint:
    rate: float
    payoff: float

    def __post_init__(self):
        if self.rate < -1e-12:
            raise InvalidDistribution("rate must be nonnegative")


@dataclass(frozen=True, eq=False)
class AuxDecomposition:
    """p_U, p_{X|U}, p_{Y|U} realizing X - U - Y.

    For several receivers ``receiver_sizes`` holds |Y_1|,...,|Y_m| and
    ``p_y_given_u`` is the product channel onto the flattened outputs.
    """

    p_u: Pmf
    p_x_given_u: Channel
    p_y_given_u: Channel
    receiver_sizes: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.p_x_given_u.input_alphabet != self.p_u.atoms or \
                self.p_y_given_u.input_alphabet != self.p_u.atoms:
            raise InvalidDistribution("channels must be indexed by the auxiliary alphabet")

    @property
    def size(self) -> int:
        return len(self.p_u)

    def joint_xyu(self) -> np.ndarray:
        """Array p(x, y, u) with y flattened."""
        return np.einsum("u,ux,uy->xyu", self.p_u.probs, self.p_x_given_u.matrix,
                         self.p_y_given_u.matrix)

    def joint_xy(self) -> JointPmf:
        t = self.joint_xyu().sum(axis=2)
        return JointPmf.from_table(t, (self.p_x_given_u.output_alphabet,
                                       self.p_y_given_u.output_alphabet), normalize=True)

    def i_x_u(self) -> float:
        j = self.joint_xyu()
        pxu = j.sum(axis=1)
        return max(entropy_array(pxu.sum(1)) + entropy_array(pxu.sum(0)) - entropy_array(pxu), 0.0)

    def i_xy_u(self) -> float:
        j = self.joint_xyu()
        return max(entropy_array(j.sum(2)) + entropy_array(j.sum((0, 1))) - entropy_array(j), 0.0)

    def h_y_given_u(self) -> float:
        pyu = self.joint_xyu().sum(axis=0)
        return max(entropy_array(pyu) - entropy_array(pyu.sum(0)), 0.0)

    def markov_residual(self) -> float:
        return markov_residual(self.joint_xyu())

    def feasibility(self, q_xy: np.ndarray) -> float:
        """TV between the reconstructed joint and a target table."""
        return total_variation(self.joint_xyu().sum(axis=2), np.asarray(q_xy))

    def to_dict(self) -> dict:
        d = {"p_u": self.p_u.to_dict(), "p_x_given_u": self.p_x_given_u.to_dict(),
             "p_y_given_u": self.p_y_given_u.to_dict(),
             "i_x_u": self.i_x_u(), "i_xy_u": self.i_xy_u()}
        if self.receiver_sizes is not None:
            d["receiver_sizes"] = list(self.receiver_sizes)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AuxDecomposition":
        sizes = d.get("receiver_sizes")
        return cls(Pmf.from_dict(d["p_u"]), Channel.from_dict(d["p_x_given_u"]),
                   Channel.from_dict(d["p_y_given_u"]), tuple(sizes) if sizes else None)

    @classmethod
    def from_arrays(cls, p_u, p_x_given_u, p_y_given_u, x_atoms=None, y_atoms=None,
                    receiver_sizes=None, drop_below: float = 1e-14) -> "AuxDecomposition":
        """Build from raw arrays, discarding labels of negligible weight."""
        p_u = np.asarray(p_u, dtype=float)
        keep = p_u > drop_below
        pu = p_u[keep] / p_u[keep].sum()
        px = np.asarray(p_x_given_u, dtype=float)[keep]
        py = np.asarray(p_y_given_u, dtype=float)[keep]
        px = np.clip(px, 0, None)
        py = np.clip(py, 0, None)
        px /= px.sum(1, keepdims=True)
        py /= py.sum(1, keepdims=True)
        u_atoms = tuple(f"u{i}" for i in range(pu.size))
        return cls(Pmf(u_atoms, pu),
                   Channel.from_matrix(px, u_atoms, x_atoms),
                   Channel.from_matrix(py, u_atoms, y_atoms),
                   tuple(receiver_sizes) if receiver_sizes else None)


def markov_residual(joint_xyu: np.ndarray) -> float:
    """max_u TV(p_{XY|u}, p_{X|u} p_{Y|u}) for an array p(x, y, u)."""
    worst = 0.0
    for u in range(joint_xyu.shape[2]):
        m = joint_xyu[:, :, u]
        w = m.sum()
        if w <= 0:
            continue
        c = m / w
        worst = max(worst, 0.5 * np.abs(c - np.outer(c.sum(1), c.sum(0))).sum())
    return float(worst)


@dataclass(eq=False)
class RegionBoundary:
    """Pareto frontier of a rate region, points sorted by increasing r."""

    points: list[RatePoint]
    witnesses: list[AuxDecomposition | None] = field(default_factory=list)
    unattainable: list[float] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        rs = [p.r for p in self.points]
        if any(b < a - 1e-12 for a, b in zip(rs, rs[1:])):
            raise InvalidDistribution("points must be sorted by increasing r")

    def as_array(self) -> np.ndarray:
        return np.array([[p.r, p.r0] for p in self.points], dtype=float).reshape(-1, 2)

    def r0_at(self, r: float) -> float:
        """Lower boundary R0 at rate r (step interpolation from the left)."""
        best = np.inf
        for p in self.points:
            if p.r <= r + 1e-12:
                best = min(best, p.r0)
        return best

    def to_csv(self) -> str:
        has_l = any(p.r_l is not None for p in self.points)
        lines = ["R,R0,RL" if has_l else "R,R0"]
        for p in self.points:
            vals = [p.r, p.r0] + ([p.r_l] if has_l else [])
            lines.append(",".join(fmt(v) for v in vals))
        return "\n".join(lines) + "\n"

    def witnesses_json(self) -> str:
        return json.dumps([w.to_dict() if w is not None else None for w in self.witnesses],
                          indent=1)


def fmt(v: float) -> str:
    """Nine significant digits, stable across runs."""
    if v is None:
        return ""
    s = f"{float(v):.9g}"
    return "0" if s == "-0" else s


__all__ = ["RatePoint", "GamePoint", "AuxDecomposition", "RegionBoundary",
           "markov_residual", "fmt"]
