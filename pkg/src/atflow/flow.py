"""Semi-implicit finite-difference time stepping for the coupled flow.

One step from (u^n, z^n) solves two linear systems:

  u:  (1 + dt) u' - dt div((eta + phi(z^n)^2) grad u') = u^n + dt g
  z:  (1 + dt/(2 eps)) z' - 2 eps dt lap z'
         = z^n - dt phi'(z^n) phi(z^n) Q(u') + dt (1 - z^n... ) see below

with Q the node-averaged squared face gradient.  The u step is the exact
minimizer of the (convex, frozen-z) u-energy plus the proximal penalty
||u - u^n||^2 / (2 dt), so it can only lower that part of the energy.  The
z step treats the linear reaction and diffusion implicitly; its matrix has
positive diagonal and nonpositive off-diagonal entries, which is what keeps
z <= 1 at every node for any dt when z^n <= 1.

Both systems are symmetric positive definite in the trapezoid-weighted inner
product (the same one `atflow.fields` integrates with), so they are solved by
a matrix-free conjugate gradient formulated in that inner product.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics
from .energy import ATParams, phi, phi_prime
from .fields import (
    Grid,
    ScalarField2D,
    check_same_grid,
    div_flux_array,
    grad_sq_face_array,
    l2_norm,
    laplacian_array,
)


class SolverError(RuntimeError):
    """A linear solve failed to converge."""


class DivergedError(RuntimeError):
    """The time integration produced non-finite values."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


@dataclass
class FlowState:
    t: float
    u: ScalarField2D
    z: ScalarField2D
    step_count: int = 0

    def __post_init__(self) -> None:
        check_same_grid(self.u, self.z)
        if self.t < 0.0:
            raise ValueError(f"time must be nonnegative, got {self.t}")


@dataclass
class TrajectoryRecord:
    """Everything a run reports: row times, diagnostics, and sparse snapshots."""

    times: list[float] = field(default_factory=list)
    diagnostics: list[diagnostics.DiagnosticsRow] = field(default_factory=list)
    snapshot_times: list[float] = field(default_factory=list)
    snapshots: list[tuple[ScalarField2D, ScalarField2D]] = field(default_factory=list)

    def final_state(self) -> tuple[ScalarField2D, ScalarField2D]:
        if not self.snapshots:
            raise ValueError("trajectory holds no snapshots")
        return self.snapshots[-1]


def cg_weighted(apply_op, b: np.ndarray, weights: np.ndarray, tol: float, maxiter: int) -> np.ndarray:
    """Conjugate gradient for operators self-adjoint in <x, y> = sum w x y.

    Stops when the weighted residual norm drops below tol (absolute);
    raises SolverError after maxiter iterations.
    """
    x = b.copy()
    r = b - apply_op(x)
    rr = float(np.sum(weights * r * r))
    if math.sqrt(rr) <= tol:
        return x
    d = r.copy()
    for _ in range(maxiter):
        ad = apply_op(d)
        dad = float(np.sum(weights * d * ad))
        if dad <= 0.0:
            raise SolverError("operator lost positive definiteness in CG")
        alpha = rr / dad
        x += alpha * d
        r -= alpha * ad
        rr_new = float(np.sum(weights * r * r))
        if math.sqrt(rr_new) <= tol:
            return x
        d = r + (rr_new / rr) * d
        rr = rr_new
    raise SolverError(
        f"CG did not reach residual {tol:g} in {maxiter} iterations "
        f"(last residual {math.sqrt(rr):.3e})"
    )


def _cg_budget(grid: Grid) -> int:
    return int(10 * math.sqrt(grid.nx * grid.ny)) + 10


def step_semi_implicit(
    state: FlowState,
    g: ScalarField2D,
    p: ATParams,
    dt: float,
    truncate: bool = True,
    cg_tol: float = 1e-10,
) -> FlowState:
    """Advance one step of size dt.  Raises DivergedError on non-finite output."""
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    grid = check_same_grid(state.u, g, state.z)
    w = grid.weights()
    maxiter = _cg_budget(grid)
    zn = state.z.values

    if truncate:
        pz = phi(zn)
        pdz = phi_prime(zn)
    else:
        pz = zn
        pdz = np.ones(grid.shape)
    a = p.eta + pz * pz

    def op_u(v: np.ndarray) -> np.ndarray:
        return (1.0 + dt) * v - dt * div_flux_array(a, v, grid)

    rhs_u = state.u.values + dt * g.values
    u_new = cg_weighted(op_u, rhs_u, w, cg_tol, maxiter)

    c = 1.0 + dt / (2.0 * p.epsilon)

    def op_z(v: np.ndarray) -> np.ndarray:
        return c * v - 2.0 * p.epsilon * dt * laplacian_array(v, grid)

    q = grad_sq_face_array(u_new, grid)
    rhs_z = zn - dt * pdz * pz * q + dt / (2.0 * p.epsilon)
    z_new = cg_weighted(op_z, rhs_z, w, cg_tol, maxiter)

    step = state.step_count + 1
    if not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(z_new))):
        raise DivergedError(f"non-finite state after step {step}", step=step)
    return FlowState(
        t=state.t + dt,
        u=ScalarField2D(grid, u_new),
        z=ScalarField2D(grid, z_new),
        step_count=step,
    )


def _n_steps(t_end: float, dt: float) -> int:
    if t_end <= 0.0:
        raise ValueError(f"t_end must be positive, got {t_end}")
    return max(1, int(math.ceil(t_end / dt - 1e-9)))


def run_flow(
    u0: ScalarField2D,
    z0: ScalarField2D,
    g: ScalarField2D,
    p: ATParams,
    dt: float,
    t_end: float,
    snapshot_stride: int = 0,
    truncate: bool = True,
) -> TrajectoryRecord:
    """Run the semi-implicit flow to t_end, recording diagnostics every step.

    snapshot_stride > 0 stores (u, z) every that many steps; the initial and
    final states are always stored.  The last step is shortened so the run
    lands on t_end exactly.
    """
    grid = check_same_grid(u0, z0, g)
    if np.min(z0.values) < 0.0 or np.max(z0.values) > 1.0:
        warnings.warn(
            "z0 has values outside [0, 1]; the flow is still defined but the "
            "maximum-principle diagnostics will report the excursion",
            stacklevel=2,
        )

    state = FlowState(t=0.0, u=u0.copy(), z=z0.copy(), step_count=0)
    traj = TrajectoryRecord()
    traj.times.append(0.0)
    traj.diagnostics.append(diagnostics.make_row(0.0, state.u, state.z, g, p, 0.0, 0.0, 0.0))
    traj.snapshot_times.append(0.0)
    traj.snapshots.append((state.u.copy(), state.z.copy()))

    n = _n_steps(t_end, dt)
    for k in range(n):
        dt_k = dt if k < n - 1 else t_end - dt * (n - 1)
        prev = state
        state = step_semi_implicit(state, g, p, dt_k, truncate=truncate)
        with np.errstate(over="ignore", invalid="ignore"):
            res = diagnostics.energy_identity_residual(prev, state, g, p, dt_k)
            du = (1.0 / dt_k) * (state.u - prev.u)
            dz = (1.0 / dt_k) * (state.z - prev.z)
            row = diagnostics.make_row(
                state.t, state.u, state.z, g, p, res, l2_norm(du), l2_norm(dz)
            )
        if not diagnostics.row_is_finite(row):
            raise DivergedError(
                f"non-finite diagnostics after step {state.step_count}", step=state.step_count
            )
        traj.times.append(state.t)
        traj.diagnostics.append(row)
        last = k == n - 1
        if last or (snapshot_stride > 0 and state.step_count % snapshot_stride == 0):
            traj.snapshot_times.append(state.t)
            traj.snapshots.append((state.u.copy(), state.z.copy()))
    return traj
