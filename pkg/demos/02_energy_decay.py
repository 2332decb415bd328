"""Energy dissipation along the spectral Galerkin flow.

Runs the flow twice with halved step size and prints three things: the
monotone energy profile, the worst defect in the per-step energy identity
(which shrinks at second order in dt), and the integrated identity

    energy(t) + integral of |du/dt|^2 + |dz/dt|^2  =  energy(0)

reconstructed from the recorded diagnostics by the trapezoid rule.
"""

import numpy as np

from atflow.energy import ATParams
from atflow.fields import Grid, ScalarField2D
from atflow.galerkin import CoeffVector, build_basis, integrate_galerkin, project

grid = Grid(32, 32)
p = ATParams(epsilon=0.1, eta=1e-3)
basis = build_basis(grid, 12)

# datum: a constant plus the two lowest nontrivial modes
g_coeffs = np.zeros(12)
g_coeffs[0] = 0.5
g_coeffs[1] = 0.2
g_coeffs[3] = -0.1
ones = project(ScalarField2D.constant(grid, 1.0), basis)

for dt in (2e-4, 1e-4):
    traj = integrate_galerkin(
        CoeffVector(g_coeffs.copy(), ones.copy()), basis, g_coeffs, p, dt=dt, t_end=0.2
    )
    rows = traj.diagnostics
    energies = np.asarray([r.energy for r in rows])
    worst_inc = float(np.max(np.diff(energies)))
    worst_res = max(abs(r.energy_identity_residual) for r in rows[1:])

    times = np.asarray(traj.times)
    f = np.asarray([r.dt_u_l2 ** 2 + r.dt_z_l2 ** 2 for r in rows])
    dissipated = float(np.sum(0.5 * np.diff(times) * (f[1:] + f[:-1])))

    print(f"dt = {dt:g}")
    print(f"  energy {energies[0]:.6f} -> {energies[-1]:.6f}, worst step change {worst_inc:+.2e}")
    print(f"  max |energy identity residual| = {worst_res:.3e}")
    print(
        f"  final energy + dissipated = {energies[-1] + dissipated:.9f}"
        f"  (initial {energies[0]:.9f})"
    )
    print()

print("halving dt cuts the residual by ~4x and tightens the integrated identity")
