"""Runtime checks distilled from the a-priori theory of the flow.

Along a solution the energy decreases and satisfies the identity
d/dt AT + ||du/dt||^2 + ||dz/dt||^2 = 0; z stays in [0, 1] when it starts
there (tracked through the negative/excess parts f0 = max(-z, 0) and
f1 = max(z - 1, 0)); and the standard estimate chain bounds sup-in-time and
time-integrated norms independently of the spatial resolution.  Each of those
statements has a computable discrete surrogate here, so a run can carry its
own evidence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .energy import ATParams, at_energy
from .fields import (
    NormLadder,
    ScalarField2D,
    grad_lp_norm,
    l2_norm,
    lp_norm,
    norm_ladder,
    second_derivative_arrays,
)


@dataclass(frozen=True)
class DiagnosticsRow:
    """One sampling instant of the flow, everything the CSV schema reports."""

    t: float
    energy: float
    energy_identity_residual: float
    f0_norm: float
    f1_norm: float
    u_ladder: NormLadder
    z_ladder: NormLadder
    dt_u_l2: float
    dt_z_l2: float


@dataclass(frozen=True)
class GNParams:
    """Exponents of a Gagliardo-Nirenberg interpolation inequality in 2-D:

        ||D^j f||_p <= C (||D^m f||_r^theta ||f||_q^(1-theta) + ||f||_s)

    valid when 1/p = j/2 + theta (1/r - m/2) + (1-theta)/q and
    j/m <= theta <= 1.  The constructor enforces both.
    """

    j: int
    m: int
    p: float
    r: float
    q: float
    s: float
    theta: float

    def __post_init__(self) -> None:
        if self.j not in (0, 1) or self.m not in (1, 2):
            raise ValueError("supported derivative orders: j in {0,1}, m in {1,2}")
        if self.j >= self.m:
            raise ValueError("need j < m")
        for name in ("p", "r", "q", "s"):
            if not getattr(self, name) > 0:
                raise ValueError(f"exponent {name} must be positive")
        if not (self.j / self.m <= self.theta <= 1.0):
            raise ValueError(f"theta={self.theta} outside [j/m, 1]")
        lhs = 1.0 / self.p
        rhs = (
            self.j / 2.0
            + self.theta * (1.0 / self.r - self.m / 2.0)
            + (1.0 - self.theta) / self.q
        )
        if abs(lhs - rhs) > 1e-12:
            raise ValueError(
                f"exponents violate the dimensional balance: 1/p={lhs}, rhs={rhs}"
            )


def max_principle_norms(z: ScalarField2D) -> tuple[float, float]:
    """L2 norms of the undershoot f0 = max(-z, 0) and overshoot f1 = max(z-1, 0).

    Both vanish iff 0 <= z <= 1 at every node.
    """
    w = z.grid.weights()
    f0 = np.maximum(-z.values, 0.0)
    f1 = np.maximum(z.values - 1.0, 0.0)
    n0 = math.sqrt(max(float(np.sum(w * f0 * f0)), 0.0))
    n1 = math.sqrt(max(float(np.sum(w * f1 * f1)), 0.0))
    return n0, n1


def energy_identity_residual(prev, next, g: ScalarField2D, p: ATParams, dt: float) -> float:
    """Defect in the discrete energy identity over one step:

        (AT(next) - AT(prev)) / dt + ||(u+ - u)/dt||^2 + ||(z+ - z)/dt||^2

    Zero for the exact flow; for a consistent integrator it shrinks with dt.
    prev and next only need .u and .z attributes (FlowState works).
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    e_prev = at_energy(prev.u, prev.z, g, p)
    e_next = at_energy(next.u, next.z, g, p)
    du = l2_norm(next.u - prev.u) / dt
    dz = l2_norm(next.z - prev.z) / dt
    return (e_next - e_prev) / dt + du * du + dz * dz


def row_is_finite(row: DiagnosticsRow) -> bool:
    """True when every scalar in the row is finite.

    Along the exact flow all recorded quantities are bounded by the initial
    data, so a non-finite entry is proof the integration diverged even while
    the raw state values still fit in floating point.
    """
    ladders = (row.u_ladder, row.z_ladder)
    vals = [
        row.energy,
        row.energy_identity_residual,
        row.f0_norm,
        row.f1_norm,
        row.dt_u_l2,
        row.dt_z_l2,
    ]
    vals.extend(v for lad in ladders for v in (lad.l2, lad.h1_semi, lad.h2_semi, lad.l4_grad4, lad.linf))
    return all(math.isfinite(v) for v in vals)


def make_row(
    t: float,
    u: ScalarField2D,
    z: ScalarField2D,
    g: ScalarField2D,
    p: ATParams,
    residual: float,
    dt_u_l2: float,
    dt_z_l2: float,
) -> DiagnosticsRow:
    """Assemble the full diagnostics row at one instant (used by both backends)."""
    f0, f1 = max_principle_norms(z)
    return DiagnosticsRow(
        t=t,
        energy=at_energy(u, z, g, p),
        energy_identity_residual=residual,
        f0_norm=f0,
        f1_norm=f1,
        u_ladder=norm_ladder(u),
        z_ladder=norm_ladder(z),
        dt_u_l2=dt_u_l2,
        dt_z_l2=dt_z_l2,
    )


@dataclass(frozen=True)
class BoundLedger:
    """The resolution-independent quantities the a-priori estimates control.

    sup_u_l2        sup_t ||u||_L2
    sup_energy      sup_t AT(u, z)      (attained at t=0 for a decaying flow)
    int_grad_u_sq   int_0^T ||grad u||_L2^2 dt
    int_dt_sq       int_0^T ||du/dt||^2 + ||dz/dt||^2 dt
    int_high_order  int_0^T ||u||_H2^2 + ||z||_H2^2 + ||grad u||_L4^4 + ||grad z||_L4^4 dt

    Time integrals use the trapezoid rule over the recorded rows.
    """

    sup_u_l2: float
    sup_energy: float
    int_grad_u_sq: float
    int_dt_sq: float
    int_high_order: float

    def as_dict(self) -> dict[str, float]:
        return {
            "sup_u_l2": self.sup_u_l2,
            "sup_energy": self.sup_energy,
            "int_grad_u_sq": self.int_grad_u_sq,
            "int_dt_sq": self.int_dt_sq,
            "int_high_order": self.int_high_order,
        }


def _trapz(times: np.ndarray, vals: np.ndarray) -> float:
    if len(times) < 2:
        return 0.0
    dt = np.diff(times)
    return float(np.sum(0.5 * dt * (vals[1:] + vals[:-1])))


def bound_ledger(traj, p: ATParams) -> BoundLedger:
    """Reduce a trajectory's diagnostics rows to the bounded quantities.

    traj needs .times and .diagnostics (TrajectoryRecord works); rows must be
    nonempty and time-aligned with times.
    """
    rows = traj.diagnostics
    if not rows:
        raise ValueError("trajectory has no diagnostics rows")
    times = np.asarray([r.t for r in rows])
    if len(times) != len(traj.times) or not np.array_equal(times, np.asarray(traj.times)):
        raise ValueError("diagnostics rows are not aligned with trajectory times")

    sup_u = max(r.u_ladder.l2 for r in rows)
    sup_e = max(r.energy for r in rows)
    grad_sq = np.asarray([r.u_ladder.h1_semi ** 2 for r in rows])
    dt_sq = np.asarray([r.dt_u_l2 ** 2 + r.dt_z_l2 ** 2 for r in rows])
    high = np.asarray(
        [
            r.u_ladder.h2_full_sq()
            + r.z_ladder.h2_full_sq()
            + r.u_ladder.l4_grad4
            + r.z_ladder.l4_grad4
            for r in rows
        ]
    )
    return BoundLedger(
        sup_u_l2=sup_u,
        sup_energy=sup_e,
        int_grad_u_sq=_trapz(times, grad_sq),
        int_dt_sq=_trapz(times, dt_sq),
        int_high_order=_trapz(times, high),
    )


def gn_ratio(f: ScalarField2D, params: GNParams) -> float:
    """Ratio of the two sides of the GN inequality for the field f.

    Returns ||D^j f||_p / (||D^m f||_r^theta ||f||_q^(1-theta) + ||f||_s).
    Finite sampled maxima of this ratio act as empirical constants; the
    theory says they stay bounded as the grid refines.
    """
    if params.j == 0:
        num = lp_norm(f, params.p)
    else:
        num = grad_lp_norm(f, params.p)

    if params.m == 1:
        dm = grad_lp_norm(f, params.r)
    else:
        fxx, fxy, fyy = second_derivative_arrays(f.values, f.grid)
        mag = np.sqrt(fxx * fxx + 2.0 * fxy * fxy + fyy * fyy)
        w = f.grid.weights()
        dm = float(np.sum(w * mag ** params.r) ** (1.0 / params.r))

    den = dm ** params.theta * lp_norm(f, params.q) ** (1.0 - params.theta) + lp_norm(
        f, params.s
    )
    if den == 0.0:
        raise ValueError("GN ratio undefined for the zero field")
    return num / den
