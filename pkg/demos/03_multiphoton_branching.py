"""How single-photon exceptional points multiply in the N-photon space.

Lifting the trimer to N photons turns its second-order point into a family of
coalescences. Their number and orders follow from counting occupation patterns,
and the numerics agree.

    python demos/03_multiphoton_branching.py
"""

import numpy as np

from epsim.exceptional import (
    count_multifurcation_points,
    count_points_with_branching,
    locate_eps,
    multifurcation_points,
)
from epsim.fock import enumerate_basis, export_fock_graph, lift_hamiltonian, lifted_eigenvalue_sums
from epsim.lattice import LatticeSpec, build_hamiltonian

spec = LatticeSpec.trimer()
for N in (1, 2, 3, 4):
    basis = enumerate_basis(N, 3)
    H = lift_hamiltonian(build_hamiltonian(spec, 2.0), basis)
    points = multifurcation_points(H)
    predicted = sorted(
        b for k in range(N + 1) for b in [count_points_with_branching(N, k, 3)[1]]
        * count_points_with_branching(N, k, 3)[0]
    )
    print(f"N={N}: dim {len(basis):2d}, points {len(points)} (predicted {count_multifurcation_points(N, 3)}),"
          f" branch counts {sorted(m for _, m in points)} vs {predicted}")

# %% the two-mode ladder: one coalescence of all N+1 states
for N in (2, 4, 6):
    basis = enumerate_basis(N, 2)
    (ep,) = locate_eps(lambda g: lift_hamiltonian(build_hamiltonian(LatticeSpec.coupler(1.0), g), basis), 0.0, 4.0)
    print(f"coupler N={N}: gamma_c={ep.gamma_c:.9f}, Jordan block {ep.jordan_blocks}")

# %% the lifted spectrum is sums of single-photon eigenvalues
basis = enumerate_basis(3, 3)
H1 = build_hamiltonian(spec, 1.3)
sums = lifted_eigenvalue_sums(np.linalg.eigvals(H1), basis)
lifted = np.linalg.eigvals(lift_hamiltonian(H1, basis))
print("\nlifted eigenvalues at gamma=1.3:", np.sort_complex(np.round(lifted, 6) + 0.0))
print("sums of single-photon ones:     ", np.sort_complex(np.round(sums, 6) + 0.0))

# %% hexagon counts for a few photon numbers
for N in (1, 2, 3):
    print(f"hexagon N={N}: {count_multifurcation_points(N, 6)} multifurcation points")

print("\n" + export_fock_graph(H1, enumerate_basis(2, 3), spec.coupling).to_dot())
