"""Loss-induced transparency and photon statistics in a semi-lossy coupler.

Launch the exceptional mode of a two-guide coupler (loss in guide 0 only) and
compare propagation at the critical loss rate with a lossier guide.

    python demos/01_two_mode_transparency.py
"""

import math

import numpy as np

from epsim.coherent import (
    evolve_postselected,
    exceptional_mode,
    mean_photon_number,
    postselect,
    project_to_fock,
    total_photon_distribution,
)
from epsim.fock import enumerate_basis, lift_hamiltonian
from epsim.lattice import LatticeSpec, build_hamiltonian, propagator

spec = LatticeSpec.coupler(1.0)
gamma_c = 2.0
alpha = math.sqrt(20)
em = exceptional_mode(spec, gamma_c, alpha)
print("exceptional mode / alpha:", np.round(em / alpha, 6))

# %% classical intensity: more loss, more light
print("\n   z   I(critical)  I(gamma=4)")
for z in np.linspace(0, 2.5, 6):
    I = [mean_photon_number(propagator(build_hamiltonian(spec, g), z) @ em) / alpha**2 for g in (2.0, 4.0)]
    print(f"{z:5.2f}  {I[0]:10.6f}  {I[1]:10.6f}")
print(f"exp(-2) = {math.exp(-2):.6f}")

# %% total photon number stays Poissonian
out = propagator(build_hamiltonian(spec, 4.0), 1.0) @ em
dist = total_photon_distribution(out, 12)
print(f"\nmean photons at z=1, gamma=4: {mean_photon_number(out):.4f} (distribution mean {dist.mean():.4f})")

# %% six-photon post-selected statistics
basis = enumerate_basis(6, 2)
start = project_to_fock(em, basis)
print("\nP(6-n, n) at z=0:", np.round(postselect(start).probabilities, 6))
for gamma in (2.0, 4.0):
    Hn = lift_hamiltonian(build_hamiltonian(spec, gamma), basis)
    p = postselect(evolve_postselected(Hn, start, 2.5)).probabilities
    print(f"P(6-n, n) at z=2.5, gamma={gamma}:", np.round(p, 6))
p0 = postselect(start).probabilities[-1]
print(f"all six photons in the lossless guide: {p0:.6f} -> {p[-1]:.6f} ({p[-1] / p0:.1f}x)")
