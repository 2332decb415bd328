"""End to end: segment a synthetic two-region image.

Builds the datum with the library, seeds the phase field at its pointwise
equilibrium 1 / (1 + 2 eps |grad g|^2) so the edge information in the datum
is visible to z from the start, runs the finite-difference flow, and prints
a column profile of the final phase field: z dips toward 0 exactly on the
contrast column and stays near 1 elsewhere.

The same run is available from the shell:

    atflow synth --kind two-region --width 64 --height 64 --out g.pgm
    atflow --input g.pgm --z0 z0.pgm --epsilon 0.05 --eta 1e-4 \\
           --dt 1e-4 --t-end 0.05 --backend fd --output-dir out
"""

import numpy as np

from atflow.cli import synth_image
from atflow.energy import ATParams
from atflow.fields import ScalarField2D, grad_sq_face_array
from atflow.flow import run_flow

eps = 0.05
g = synth_image("two-region", 64, 64)
q = grad_sq_face_array(g.values, g.grid)
z0 = ScalarField2D(g.grid, 1.0 / (1.0 + 2.0 * eps * q))

traj = run_flow(
    g.copy(), z0, g, ATParams(epsilon=eps, eta=1e-4), dt=1e-4, t_end=0.05
)
u, z = traj.final_state()

colmin = z.values.min(axis=1)
ix = int(np.argmin(colmin))
print("column profile of min_y z(x, y), 64 columns, * marks the jump columns\n")
for i in range(0, 64, 2):
    bar = "#" * int(round(40 * colmin[i]))
    mark = " *" if i in (30, 32) else ""
    print(f"  col {i:>2}  {colmin[i]:.3f}  {bar}{mark}")

print()
print(f"sharpest response at column {ix} (jump lies between 31 and 32)")
print(f"min z = {z.values.min():.3f}, far-field z = {colmin[:20].min():.3f}")
print(f"energy {traj.diagnostics[0].energy:.4f} -> {traj.diagnostics[-1].energy:.4f}")
