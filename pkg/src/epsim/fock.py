"""N-photon Fock bases, lifted Hamiltonians and Fock graphs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np

from .errors import CapacityError, ValidationError

DEFAULT_MAX_DIMENSION = 10**6


@dataclass(frozen=True, eq=False)
class FockBasis:
    """Occupation vectors ``(n_1, ..., n_M)`` with ``sum(n) == N``, in colex order.

    Colexicographic order compares the last mode first, so for two modes the
    states run ``(N, 0), (N-1, 1), ..., (0, N)`` and the position of a state is
    the photon number in the second guide.
    """

    N: int
    M: int
    states: np.ndarray
    index: dict = field(repr=False)

    def __len__(self):
        return len(self.states)

    def __eq__(self, other):
        return (
            isinstance(other, FockBasis)
            and (self.N, self.M) == (other.N, other.M)
            and np.array_equal(self.states, other.states)
        )

    def __hash__(self):
        return hash((self.N, self.M, self.states.tobytes()))

    def index_of(self, occupation) -> int:
        return self.index[tuple(int(n) for n in occupation)]

    @property
    def labels(self) -> list[str]:
        return ["_".join(str(n) for n in s) for s in self.states]


def basis_dimension(N: int, M: int) -> int:
    return math.comb(N + M - 1, N)


def enumerate_basis(N: int, M: int, max_dimension: int = DEFAULT_MAX_DIMENSION) -> FockBasis:
    if int(N) != N or N < 0:
        raise ValidationError(f"photon number must be an integer >= 0, got {N!r}")
    if int(M) != M or M < 2:
        raise ValidationError(f"mode count must be an integer >= 2, got {M!r}")
    N, M = int(N), int(M)
    D = basis_dimension(N, M)
    if D > max_dimension:
        raise CapacityError(
            f"{N}-photon basis over {M} modes has {D} states, above the cap of {max_dimension}"
        )
    states = np.zeros((D, M), dtype=np.int64)
    for row, modes in enumerate(combinations_with_replacement(range(M), N)):
        for m in modes:
            states[row, m] += 1
    states = states[np.lexsort(states.T)]  # last column is the primary key: colex
    index = {tuple(int(n) for n in s): i for i, s in enumerate(states)}
    return FockBasis(N, M, states, index)


def _check_pair(H1, basis):
    H1 = np.asarray(H1, dtype=complex)
    if H1.ndim != 2 or H1.shape != (basis.M, basis.M):
        raise ValidationError(
            f"single-photon matrix of shape {H1.shape} does not match a {basis.M}-mode basis"
        )
    return H1


def _hops(H1, basis):
    """Yield ``(target, source, m_from, m_to, amplitude)`` for every single-photon hop."""
    M = basis.M
    pairs = [(m, mp) for m in range(M) for mp in range(M) if m != mp and H1[mp, m] != 0]
    for j, s in enumerate(basis.states):
        for m, mp in pairs:
            if s[m] == 0:
                continue
            t = s.copy()
            t[m] -= 1
            t[mp] += 1
            yield basis.index[tuple(int(n) for n in t)], j, m, mp, math.sqrt(s[m] * (s[mp] + 1))


_HOP_TABLES: dict = {}


def _hop_table(basis):
    """Cached hop arrays ``(target, source, m_from, m_to, amplitude)`` for a full coupling graph."""
    key = (basis.N, basis.M)
    if key not in _HOP_TABLES:
        full = np.ones((basis.M, basis.M))
        rows = list(_hops(full, basis))
        cols = list(zip(*rows)) if rows else [(), (), (), (), ()]
        _HOP_TABLES[key] = tuple(
            np.asarray(c, dtype=float if k == 4 else np.int64) for k, c in enumerate(cols)
        )
    return _HOP_TABLES[key]


def lift_hamiltonian(H1, basis: FockBasis) -> np.ndarray:
    """Matrix of the second-quantised ``sum H1[m', m] a†_{m'} a_m`` in the N-photon subspace.

    The diagonal entry of state ``n`` is ``sum_m n_m H1[m, m]``; a photon hopping
    from ``m`` to ``m'`` contributes ``H1[m', m] sqrt(n_m (n_{m'} + 1))`` with the
    occupations taken on the source state.
    """
    H1 = _check_pair(H1, basis)
    D = len(basis)
    H = np.zeros((D, D), dtype=complex)
    H[np.arange(D), np.arange(D)] = basis.states @ np.diag(H1)
    tgt, src, m, mp, amp = _hop_table(basis)
    # a (target, source) pair fixes the hop uniquely, so no index repeats
    H[tgt, src] += H1[mp, m] * amp
    return H


def lifted_eigenvalue_sums(single_eigenvalues, basis: FockBasis) -> np.ndarray:
    """``sum_m n_m λ_m`` for every occupation vector of ``basis`` (non-interacting photons)."""
    lam = np.asarray(single_eigenvalues, dtype=complex)
    if lam.shape != (basis.M,):
        raise ValidationError(f"expected {basis.M} single-photon eigenvalues, got {lam.shape}")
    return basis.states @ lam


@dataclass(frozen=True)
class FockGraph:
    """Nodes are occupation vectors, edges single-photon hops.

    ``losses[i]`` is ``sum_m n_m (-Im H1[m, m])``; built from ``H1`` at ``Γ = 1``
    this equals ``sum_m g_m n_m``. ``weights`` are hopping amplitudes in units of
    the coupling.
    """

    basis: FockBasis
    losses: np.ndarray
    edges: list[tuple[int, int]]
    weights: list[float]

    @property
    def num_nodes(self):
        return len(self.basis)

    def degree(self, node: int) -> int:
        return sum(node in e for e in self.edges)

    def to_dot(self, name: str = "fock") -> str:
        labels = self.basis.labels
        lines = [f"graph {name} {{"]
        for lab, loss in zip(labels, self.losses):
            lines.append(f'  "{lab}" [loss={_fmt(loss)}];')
        for (a, b), w in zip(self.edges, self.weights):
            lines.append(f'  "{labels[a]}" -- "{labels[b]}" [weight={_fmt(w)}];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _fmt(x: float) -> str:
    x = float(x)
    return f"{0.0 if x == 0 else x:.12g}"


def export_fock_graph(H1, basis: FockBasis, coupling: float | None = None) -> FockGraph:
    """Fock graph of the lifted Hamiltonian.

    ``coupling`` sets the unit of the edge weights; by default the largest
    off-diagonal magnitude of ``H1``.
    """
    H1 = _check_pair(H1, basis)
    if coupling is None:
        off = np.abs(H1 - np.diag(np.diag(H1)))
        coupling = float(off.max()) or 1.0
    losses = basis.states @ (-np.diag(H1).imag)
    found = {}
    for i, j, m, mp, amp in _hops(H1, basis):
        key = (min(i, j), max(i, j))
        if key not in found:
            found[key] = abs(H1[mp, m]) * amp / coupling
    edges = sorted(found)
    return FockGraph(basis, losses + 0.0, edges, [found[e] for e in edges])
