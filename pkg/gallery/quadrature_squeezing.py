"""Two-mode quadrature squeezing in dB for coherent, noisy and dephased pumps."""

import math

import numpy as np
from scipy.optimize import brentq

from opgen import OpgParams, gpa_state
from opgen.engine import gpa_displaced_thermal_correction
from opgen.measures import noisy_quadrature_correction, quadrature_variance, squeezing_db
from opgen.pumps import Coherent, DephasedCoherent

a, up = 10.0, math.pi / 2


def db(state):
    return squeezing_db(quadrature_variance(state))


print(f"{'gt|a0|':>7} {'coherent':>9} {'noisy':>9} {'noisy cf':>9} {'dephased':>9}")
for x in np.arange(0.0, 1.21, 0.1):
    p = OpgParams(x / a)
    print(f"{x:7.2f} {db(gpa_state(Coherent(a, up), p)):9.4f}"
          f" {db(gpa_displaced_thermal_correction(a, up, 10.0, p)):9.4f}"
          f" {squeezing_db(noisy_quadrature_correction(a, 10.0, x / a)):9.4f}"
          f" {db(gpa_state(DephasedCoherent(a, up, 0.1), p)):9.4f}")

x8 = brentq(lambda x: db(gpa_state(Coherent(a, up), OpgParams(x / a))) - 8, 0.5, 1.2)
print(f"\ncoherent pump reaches 8 dB at gt|a0| = {x8:.5f} (0.4 ln 10 = {0.4 * math.log(10):.5f})")
