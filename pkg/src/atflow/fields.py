"""Uniform rectangular grids and the discrete calculus used by every solver module.

All operators act on node-centered samples of functions on [0, lx] x [0, ly]
and impose homogeneous Neumann boundary conditions by ghost-node reflection:
the ghost value outside the boundary equals the first interior value, so
one-sided differences across the boundary vanish.

Quadrature is the tensor-product trapezoid rule.  The flux-form operators
(`div_flux`, `laplacian_neumann`) are built so that summation by parts is
exact: for any fields u, v and coefficient a,

    sum_ij w_ij v_ij (div_flux(a, u))_ij = -dirichlet_form(a, u, v)

with w the trapezoid weights.  That exact duality is what makes the
variational gradient in `atflow.energy` the true gradient of the discrete
energy, not an O(h) approximation of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform node-centered grid on the rectangle [0, lx] x [0, ly].

    nx, ny count nodes (not cells), so the spacings are lx/(nx-1), ly/(ny-1).
    Two nodes per direction is the floor (one face, reflected ghosts).
    """

    nx: int
    ny: int
    lx: float = 1.0
    ly: float = 1.0

    def __post_init__(self) -> None:
        if self.nx < 2 or self.ny < 2:
            raise ValueError(f"grid needs nx, ny >= 2, got {self.nx} x {self.ny}")
        if not (self.lx > 0.0 and self.ly > 0.0):
            raise ValueError(f"side lengths must be positive, got {self.lx}, {self.ly}")

    @property
    def hx(self) -> float:
        return self.lx / (self.nx - 1)

    @property
    def hy(self) -> float:
        return self.ly / (self.ny - 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def area(self) -> float:
        return self.lx * self.ly

    def xs(self) -> np.ndarray:
        return np.linspace(0.0, self.lx, self.nx)

    def ys(self) -> np.ndarray:
        return np.linspace(0.0, self.ly, self.ny)

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates X, Y with shape (nx, ny)."""
        return np.meshgrid(self.xs(), self.ys(), indexing="ij")

    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights per node, shape (nx, ny).

        Interior nodes carry hx*hy, edges half of that, corners a quarter.
        """
        wx = np.full(self.nx, self.hx)
        wx[0] = wx[-1] = 0.5 * self.hx
        wy = np.full(self.ny, self.hy)
        wy[0] = wy[-1] = 0.5 * self.hy
        return np.outer(wx, wy)


@dataclass
class ScalarField2D:
    """Node samples of a scalar function on a Grid.  values has shape (nx, ny)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.shape != self.grid.shape:
            raise ValueError(
                f"values shape {arr.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("field values must be finite")
        self.values = arr

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "ScalarField2D":
        x, y = grid.meshgrid()
        return cls(grid, fn(x, y))

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "ScalarField2D":
        return cls(grid, np.full(grid.shape, float(c)))

    def copy(self) -> "ScalarField2D":
        return ScalarField2D(self.grid, self.values.copy())

    # Small arithmetic surface so test and demo code reads like the math.
    def __add__(self, other):
        return ScalarField2D(self.grid, self.values + _values_of(other, self.grid))

    def __sub__(self, other):
        return ScalarField2D(self.grid, self.values - _values_of(other, self.grid))

    def __mul__(self, scalar: float):
        return ScalarField2D(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField2D(self.grid, -self.values)


@dataclass(frozen=True)
class NormLadder:
    """The norms the a-priori estimates control, evaluated discretely.

    l2        L2 norm
    h1_semi   L2 norm of the (central) gradient
    h2_semi   L2 norm of second derivatives, sqrt(int fxx^2 + 2 fxy^2 + fyy^2)
    l4_grad4  int |grad f|^4  (reported as the integral, not its 4th root)
    linf      max |f| over nodes
    """

    l2: float
    h1_semi: float
    h2_semi: float
    l4_grad4: float
    linf: float

    def h2_full_sq(self) -> float:
        """Squared full H^2 norm: l2^2 + h1^2 + h2^2."""
        return self.l2 ** 2 + self.h1_semi ** 2 + self.h2_semi ** 2


def _values_of(other, grid: Grid) -> np.ndarray:
    if isinstance(other, ScalarField2D):
        if other.grid != grid:
            raise ValueError("fields live on different grids")
        return other.values
    return np.asarray(other, dtype=np.float64)


def check_same_grid(*fields: ScalarField2D) -> Grid:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise ValueError("fields live on different grids")
    return grid


def _reflect(values: np.ndarray) -> np.ndarray:
    # Ghost layer by reflection: pad[-1] == values[1], matching a zero
    # normal derivative at the boundary node to second order.
    return np.pad(values, 1, mode="reflect")


# ---------------------------------------------------------------------------
# array-level kernels; the public API wraps them in ScalarField2D


def grad_arrays(values: np.ndarray, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    p = _reflect(values)
    fx = (p[2:, 1:-1] - p[:-2, 1:-1]) / (2.0 * grid.hx)
    fy = (p[1:-1, 2:] - p[1:-1, :-2]) / (2.0 * grid.hy)
    return fx, fy


def laplacian_array(values: np.ndarray, grid: Grid) -> np.ndarray:
    p = _reflect(values)
    core = p[1:-1, 1:-1]
    out = (p[2:, 1:-1] - 2.0 * core + p[:-2, 1:-1]) / grid.hx ** 2
    out += (p[1:-1, 2:] - 2.0 * core + p[1:-1, :-2]) / grid.hy ** 2
    return out


def div_flux_array(coef: np.ndarray, values: np.ndarray, grid: Grid) -> np.ndarray:
    """div(a grad f) in flux form with zero flux through the boundary.

    Face coefficients are arithmetic means of the node values of a.  The
    boundary rows divide by the half node weight (hx/2), which is exactly
    the reflected-ghost stencil there and keeps the operator self-adjoint
    under the trapezoid inner product.
    """
    ax = 0.5 * (coef[1:, :] + coef[:-1, :])          # (nx-1, ny) x-face means
    ay = 0.5 * (coef[:, 1:] + coef[:, :-1])          # (nx, ny-1) y-face means
    fx = ax * (values[1:, :] - values[:-1, :]) / grid.hx
    fy = ay * (values[:, 1:] - values[:, :-1]) / grid.hy

    out = np.zeros_like(values)
    # x direction: interior nodes see (F_{i+1/2} - F_{i-1/2})/hx; boundary
    # nodes see the single interior face over the half weight hx/2.
    out[1:-1, :] += (fx[1:, :] - fx[:-1, :]) / grid.hx
    out[0, :] += fx[0, :] / (0.5 * grid.hx)
    out[-1, :] += -fx[-1, :] / (0.5 * grid.hx)
    out[:, 1:-1] += (fy[:, 1:] - fy[:, :-1]) / grid.hy
    out[:, 0] += fy[:, 0] / (0.5 * grid.hy)
    out[:, -1] += -fy[:, -1] / (0.5 * grid.hy)
    return out


def dirichlet_form_arrays(
    coef: np.ndarray, u: np.ndarray, v: np.ndarray, grid: Grid
) -> float:
    """Face-based bilinear form  int a grad u . grad v  (exact dual of div_flux)."""
    hx, hy = grid.hx, grid.hy
    wx = np.full(grid.nx, hx)
    wx[0] = wx[-1] = 0.5 * hx
    wy = np.full(grid.ny, hy)
    wy[0] = wy[-1] = 0.5 * hy

    ax = 0.5 * (coef[1:, :] + coef[:-1, :])
    ay = 0.5 * (coef[:, 1:] + coef[:, :-1])
    dux = (u[1:, :] - u[:-1, :]) / hx
    dvx = (v[1:, :] - v[:-1, :]) / hx
    duy = (u[:, 1:] - u[:, :-1]) / hy
    dvy = (v[:, 1:] - v[:, :-1]) / hy

    sx = np.sum(ax * dux * dvx * (hx * wy[np.newaxis, :]))
    sy = np.sum(ay * duy * dvy * (wx[:, np.newaxis] * hy))
    return float(sx + sy)


def grad_sq_face_array(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Node-averaged squared face differences, the discrete |grad f|^2.

    At node i the x part averages the two adjacent face slopes squared
    (one face at the boundary).  This is d/da of the face-based Dirichlet
    form with node coefficient a, so the z-equation built from it is the
    exact variational partner of the energy.
    """
    dx2 = ((values[1:, :] - values[:-1, :]) / grid.hx) ** 2
    dy2 = ((values[:, 1:] - values[:, :-1]) / grid.hy) ** 2
    out = np.zeros_like(values)
    out[1:-1, :] += 0.5 * (dx2[1:, :] + dx2[:-1, :])
    out[0, :] += dx2[0, :]
    out[-1, :] += dx2[-1, :]
    out[:, 1:-1] += 0.5 * (dy2[:, 1:] + dy2[:, :-1])
    out[:, 0] += dy2[:, 0]
    out[:, -1] += dy2[:, -1]
    return out


# ---------------------------------------------------------------------------
# public field-level API


def gradient(f: ScalarField2D) -> tuple[ScalarField2D, ScalarField2D]:
    """Central-difference gradient with reflected ghosts (second order)."""
    fx, fy = grad_arrays(f.values, f.grid)
    return ScalarField2D(f.grid, fx), ScalarField2D(f.grid, fy)

def laplacian_neumann(f: ScalarField2D) -> ScalarField2D:
    """Five-point Laplacian with reflected ghosts (zero Neumann data)."""
    return ScalarField2D(f.grid, laplacian_array(f.values, f.grid))


def div_flux(coef: ScalarField2D, f: ScalarField2D) -> ScalarField2D:
    grid = check_same_grid(coef, f)
    return ScalarField2D(grid, div_flux_array(coef.values, f.values, grid))


def integrate(f: ScalarField2D) -> float:
    """Trapezoid-rule integral over the rectangle."""
    return float(np.sum(f.grid.weights() * f.values))


def inner(f: ScalarField2D, g: ScalarField2D) -> float:
    """Trapezoid-weighted L2 inner product."""
    grid = check_same_grid(f, g)
    return float(np.sum(grid.weights() * f.values * g.values))


def l2_norm(f: ScalarField2D) -> float:
    return math.sqrt(max(inner(f, f), 0.0))


def lp_norm(f: ScalarField2D, p: float) -> float:
    if p <= 0:
        raise ValueError(f"lp_norm needs p > 0, got {p}")
    w = f.grid.weights()
    return float(np.sum(w * np.abs(f.values) ** p) ** (1.0 / p))


def grad_lp_norm(f: ScalarField2D, p: float) -> float:
    """L^p norm of the pointwise gradient magnitude |grad f|."""
    if p <= 0:
        raise ValueError(f"grad_lp_norm needs p > 0, got {p}")
    fx, fy = grad_arrays(f.values, f.grid)
    mag_sq = fx * fx + fy * fy
    w = f.grid.weights()
    return float(np.sum(w * mag_sq ** (0.5 * p)) ** (1.0 / p))


def second_derivative_arrays(
    values: np.ndarray, grid: Grid
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    p = _reflect(values)
    core = p[1:-1, 1:-1]
    fxx = (p[2:, 1:-1] - 2.0 * core + p[:-2, 1:-1]) / grid.hx ** 2
    fyy = (p[1:-1, 2:] - 2.0 * core + p[1:-1, :-2]) / grid.hy ** 2
    fxy = (p[2:, 2:] - p[2:, :-2] - p[:-2, 2:] + p[:-2, :-2]) / (4.0 * grid.hx * grid.hy)
    return fxx, fxy, fyy


def norm_ladder(f: ScalarField2D) -> NormLadder:
    """Evaluate every norm the diagnostics track, in one pass."""
    grid = f.grid
    w = grid.weights()
    vals = f.values

    l2 = math.sqrt(max(float(np.sum(w * vals * vals)), 0.0))
    fx, fy = grad_arrays(vals, grid)
    mag_sq = fx * fx + fy * fy
    h1 = math.sqrt(max(float(np.sum(w * mag_sq)), 0.0))
    l4g = float(np.sum(w * mag_sq * mag_sq))
    fxx, fxy, fyy = second_derivative_arrays(vals, grid)
    h2 = math.sqrt(
        max(float(np.sum(w * (fxx * fxx + 2.0 * fxy * fxy + fyy * fyy))), 0.0)
    )
    linf = float(np.max(np.abs(vals)))
    return NormLadder(l2=l2, h1_semi=h1, h2_semi=h2, l4_grad4=l4g, linf=linf)
