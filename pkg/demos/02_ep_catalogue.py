"""Exceptional points of the built-in lattices.

Sweeps the loss rate, locates coalescences and reports their Jordan structure
and how the eigenvalue splitting scales nearby.

    python demos/02_ep_catalogue.py
"""

from epsim.exceptional import locate_eps
from epsim.lattice import LatticeSpec, build_hamiltonian

lattices = {
    "coupler (1,0)": LatticeSpec.coupler(1.0),
    "trimer (0,1,0)": LatticeSpec.trimer(),
    "tetramer (1,0,1,0)": LatticeSpec.tetramer(),
    "hexagon ring": LatticeSpec.hexagon(),
    "mirrored chain (0,1,0,1)": LatticeSpec.m_config(4),
    "outer-lossy chain (1,0,0,1)": LatticeSpec(4, 2**-0.5, (1.0, 0.0, 0.0, 1.0)),
}

for name, spec in lattices.items():
    eps = locate_eps(lambda g, spec=spec: build_hamiltonian(spec, g), 0.0, 4.0)
    print(f"{name}: kappa={spec.coupling:.6f}, {len(eps)} exceptional point(s)")
    for e in eps:
        print(f"    gamma_c={e.gamma_c:.9f}  lambda={e.eigenvalue:.6f}  blocks={e.jordan_blocks}"
              f"  splitting ~ eps^{e.scaling_exponent:.3f}")
