"""What happens to S at a ring eigenvalue, and how that depends on beta.

At an eigenvalue lam0 the Q-matrix has a pole whose residue D0 spans a
subspace with projector P0. Its regular part Q0 decides how S(lam0) departs
from the weak-coupling value -I + 2 P0. Three lead layouts on the free ring,
all at lam0 = 1:

  (0, pi)          P0 has rank 1 and P_perp Q0 P_perp = 0, so S(lam0) is
                   -I + 2 P0 for every beta (what is printed is rounding);
  (0, pi/2)        P0 = I, so S(lam0) = I: full reflection with no phase;
  three leads      the correction is second order in beta.
"""
import math

import numpy as np

from ringscatter import RingDomain, resonance_data, smatrix_at_resonance
from ringscatter.qmatrix import default_eigendata

L = 2 * math.pi
layouts = {
    "(0, pi)": (0.0, math.pi),
    "(0, pi/2)": (0.0, math.pi / 2),
    "three leads": (0.0, L / 3, 2 * L / 3),
}

np.set_printoptions(precision=4, suppress=True)
for name, pts in layouts.items():
    ring = RingDomain.uniform(L, 0.0, pts)
    res = resonance_data(ring, default_eigendata(ring), 1.0)
    lead = -np.eye(len(pts)) + 2 * res.P0
    print(f"\n{name}: multiplicity {res.multiplicity}, rank {res.rank}")
    print("P0 =\n", res.P0)
    for beta in (0.4, 0.2, 0.1, 0.05):
        e = np.linalg.norm(smatrix_at_resonance(res, beta).S - lead)
        print(f"  beta {beta:5.2f}   |S(lam0) - (-I + 2 P0)| = {e:.3e}")
