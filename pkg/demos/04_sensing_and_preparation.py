"""Loss sensing near the critical point and lossless preparation of the input.

The slope of the mean photon number in the lossless guide grows linearly with
the post-selected photon number. The exceptional mode itself can be made by a
lossless section from a single-guide launch.

    python demos/04_sensing_and_preparation.py
"""

import math

import numpy as np

from epsim.coherent import exceptional_mode, preparation_residual, prepare_em_lossless
from epsim.lattice import LatticeSpec
from epsim.sensing import SensingSetup, sensitivity_slope

spec = LatticeSpec.coupler(1.0)
em = exceptional_mode(spec, 2.0, math.sqrt(20))

classical = sensitivity_slope(SensingSetup(spec, em, 1.5, critical_gamma=2.0), 2.0)
print(f"d n_bar / d gamma at gamma_c: {classical.value:.6f} ({classical.scheme} difference)")
for N in (2, 4, 6, 8):
    s = SensingSetup(spec, em, 1.5, "mean_photons_in", N, (1,), critical_gamma=2.0)
    slope = sensitivity_slope(s, 2.0)
    print(f"N={N}: slope {slope.value:.6f}, per photon {slope.value / N:.6f}")

# %% lossless preparation
for s in (LatticeSpec.coupler(1.0), LatticeSpec.trimer()):
    r = prepare_em_lossless(s, 1.0)
    print(f"\n{s.num_modes} guides: launch {r.inputs}, stop at z={r.distance:.6f}, residual {r.residual:.1e}")
    print("  prepared:", np.round(r.prepared, 6))

# the trimer needs three times the shorter distance
kappa = LatticeSpec.trimer().coupling
for d in (math.pi / (4 * math.sqrt(2) * kappa), 3 * math.pi / (4 * math.sqrt(2) * kappa)):
    _, _, res = preparation_residual(LatticeSpec.trimer(), [0, 1, 0], d)
    print(f"trimer centre launch, z={d:.6f}: residual {res:.6f}")
