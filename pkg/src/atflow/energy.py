"""Ambrosio-Tortorelli energy and its L2 variational gradient.

The regularized Mumford-Shah (Ambrosio-Tortorelli) functional with fidelity,
for a datum g on the rectangle U:

    AT(u, z) = 1/2 int (eta + phi(z)^2) |grad u|^2 + (u - g)^2 dx
             + int (1 - z)^2 / (4 eps) + eps |grad z|^2 dx

phi is a C^1 monotone cutoff that is the identity on [0, 1] and saturates at
-1 below and 2 above; it keeps the diffusion coefficient bounded when z
leaves [0, 1] without changing the flow of admissible states.

`variational_gradient` returns (G_u, G_z) with d/dt AT = -<G_u, du/dt>
- <G_z, dz/dt> exactly in the discrete trapezoid inner product: the Dirichlet
terms of `at_energy` use face differences whose adjoint is the flux-form
divergence of `atflow.fields`, so the identity holds to round-off, not just
to truncation order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import (
    ScalarField2D,
    check_same_grid,
    dirichlet_form_arrays,
    div_flux_array,
    grad_sq_face_array,
    laplacian_array,
)


@dataclass(frozen=True)
class ATParams:
    """epsilon: phase-field width.  eta: floor of the diffusion coefficient."""

    epsilon: float
    eta: float

    def __post_init__(self) -> None:
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.eta > 0.0:
            raise ValueError(f"eta must be positive, got {self.eta}")


def phi(s):
    """C^1 monotone cutoff: -1 on s<=-1, identity on [0,1], 2 on s>=2.

    The blends on (-1,0) and (1,2) are the monotone cubic Hermite
    interpolants matching value and slope at both knots.
    """
    arr = np.asarray(s, dtype=np.float64)
    tl = arr + 1.0
    th = arr - 1.0
    out = np.select(
        [arr <= -1.0, arr < 0.0, arr <= 1.0, arr < 2.0],
        [-1.0, tl * tl * (2.0 - tl) - 1.0, arr, -th * th * th + th * th + th + 1.0],
        default=2.0,
    )
    if np.isscalar(s) or arr.ndim == 0:
        return float(out)
    return out


def phi_prime(s):
    """Derivative of `phi`; zero on the saturated branches, one on [0, 1]."""
    arr = np.asarray(s, dtype=np.float64)
    tl = arr + 1.0
    th = arr - 1.0
    out = np.select(
        [arr <= -1.0, arr < 0.0, arr <= 1.0, arr < 2.0],
        [0.0, tl * (4.0 - 3.0 * tl), np.ones_like(arr), -(3.0 * th + 1.0) * (th - 1.0)],
        default=0.0,
    )
    if np.isscalar(s) or arr.ndim == 0:
        return float(out)
    return out


def diffusion_coefficient(z: ScalarField2D, p: ATParams, truncate: bool = True) -> np.ndarray:
    """eta + phi(z)^2 as node values (phi skipped when truncate is off)."""
    pz = phi(z.values) if truncate else z.values
    return p.eta + pz * pz


def at_energy(u: ScalarField2D, z: ScalarField2D, g: ScalarField2D, p: ATParams) -> float:
    grid = check_same_grid(u, z, g)
    w = grid.weights()
    a = diffusion_coefficient(z, p)

    du_term = dirichlet_form_arrays(a, u.values, u.values, grid)
    fid = float(np.sum(w * (u.values - g.values) ** 2))
    ones = np.ones(grid.shape)
    dz_term = dirichlet_form_arrays(ones, z.values, z.values, grid)
    well = float(np.sum(w * (1.0 - z.values) ** 2))

    return 0.5 * (du_term + fid) + well / (4.0 * p.epsilon) + p.epsilon * dz_term


def variational_gradient(
    u: ScalarField2D,
    z: ScalarField2D,
    g: ScalarField2D,
    p: ATParams,
    truncate: bool = True,
) -> tuple[ScalarField2D, ScalarField2D]:
    """Right-hand sides (G_u, G_z) of the gradient flow

        du/dt = div((eta + phi(z)^2) grad u) - (u - g)
        dz/dt = 2 eps lap z - phi'(z) phi(z) |grad u|^2 + (1 - z) / (2 eps)

    With truncate off the cutoff is dropped (phi = id), which matches the
    untruncated system on states with 0 <= z <= 1; phi is the identity there,
    so the two settings agree bitwise on admissible states.
    """
    grid = check_same_grid(u, z, g)
    if truncate:
        pz = phi(z.values)
        pdz = phi_prime(z.values)
    else:
        pz = z.values
        pdz = np.ones(grid.shape)

    a = p.eta + pz * pz
    gu = div_flux_array(a, u.values, grid) - (u.values - g.values)

    q = grad_sq_face_array(u.values, grid)
    gz = (
        2.0 * p.epsilon * laplacian_array(z.values, grid)
        - pdz * pz * q
        + (1.0 - z.values) / (2.0 * p.epsilon)
    )
    return ScalarField2D(grid, gu), ScalarField2D(grid, gz)
