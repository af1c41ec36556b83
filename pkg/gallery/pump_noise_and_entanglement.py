"""How pump noise changes the down-converted pair state.

Prints negativity and linear entropy against gt for four pumps with the
same mean photon number, then checks the approximate engine against exact
three-mode evolution at small amplitude.
"""

import math

import numpy as np

from opgen import OpgParams, gpa_state, perturbative_state
from opgen.measures import linear_entropy, negativity
from opgen.oracle import evolve_coherent
from opgen.pumps import Coherent, DephasedCoherent, DisplacedThermal, Thermal

PUMPS = {
    "coherent": Coherent(10.0),
    "displaced thermal": DisplacedThermal(math.sqrt(90.0), 0.0, 10.0),
    "dephased 0.3": DephasedCoherent(10.0, 0.0, 0.3),
    "thermal": Thermal(100.0),
}

print(f"{'gt':>6} " + " ".join(f"{k:>22}" for k in PUMPS))
print(f"{'':>6} " + " ".join(f"{'N':>10} {'S_L':>11}" for _ in PUMPS))
for gt in np.arange(0.01, 0.051, 0.01):
    cells = []
    for pump in PUMPS.values():
        s = gpa_state(pump, OpgParams(gt))
        cells.append(f"{negativity(s):10.5f} {linear_entropy(s):11.5f}")
    print(f"{gt:6.3f} " + " ".join(cells))

print("\nexact evolution vs second-order state, |alpha0| = 0.5")
for gt in (0.01, 0.02, 0.05):
    ex = evolve_coherent(0.5, OpgParams(gt)).coefficients
    pt = perturbative_state(Coherent(0.5), OpgParams(gt)).coefficients
    print(f"  gt={gt:.2f}  |rho01 exact - rho01 pert| = {abs(ex[0, 1] - pt[0, 1]):.3e}")
