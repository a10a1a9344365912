"""Coherent light in lossy lattices: amplitudes, N-photon projections and post-selection.

A coherent input stays coherent under linear lossy evolution, so the output is
fully described by the amplitude vector ``U(z) @ alpha``. Its projection on the
N-photon subspace has coefficients

    c_n = exp(-sum|α_m|²/2) * prod_m α_m**n_m / sqrt(n_m!)

and post-selection renormalises these within the subspace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from .errors import NumericError, PostSelectionError, PreconditionError, ValidationError
from .exceptional import find_eps, sweep
from .fock import FockBasis
from .lattice import LatticeSpec, build_hamiltonian, fix_phase, propagator

#: squared-norm floor below which an N-photon component is treated as lost to underflow
UNDERFLOW_THRESHOLD = 1e-150


def as_amplitudes(a) -> np.ndarray:
    """Validate a coherent amplitude vector (one complex ``α_m`` per waveguide)."""
    a = np.atleast_1d(np.asarray(a, dtype=complex))
    if a.ndim != 1:
        raise ValidationError(f"amplitudes must be a vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("amplitudes must be finite")
    return a


@dataclass(frozen=True)
class NPhotonState:
    """Coefficients over an N-photon Fock basis, normalised or not."""

    basis: FockBasis
    coeffs: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        if self.coeffs.shape != (len(self.basis),):
            raise ValidationError(
                f"expected {len(self.basis)} coefficients, got shape {self.coeffs.shape}"
            )

    @property
    def norm_squared(self) -> float:
        return float(np.vdot(self.coeffs, self.coeffs).real)


@dataclass(frozen=True)
class PhotonDistribution:
    """Probabilities over labelled outcomes.

    ``tail_mass`` is the probability left outside the listed outcomes (non-zero
    only for truncated distributions), so ``probabilities.sum() + tail_mass == 1``,
    and ``tail_mean`` is what those outcomes add to the mean.
    """

    probabilities: np.ndarray
    labels: tuple
    tail_mass: float = 0.0
    tail_mean: float = 0.0

    def __getitem__(self, label):
        return float(self.probabilities[self.labels.index(label)])

    def mean(self) -> float:
        """Mean of numeric labels, e.g. of the total photon number, including the tail."""
        return float(np.dot(np.asarray(self.labels, dtype=float), self.probabilities)) + self.tail_mean


def exceptional_mode(spec: LatticeSpec, gamma_c: float, alpha: complex = 1.0,
                     branch: int = 0, tol: float = 1e-6) -> np.ndarray:
    """Coherent amplitudes ``α v`` of the exceptional mode at ``gamma_c``.

    ``v`` is the unit right eigenvector that survives the coalescence, with its
    component in the first lossless waveguide made real and positive; for the
    semi-lossy coupler that is ``(i, 1)/√2``. ``gamma_c`` must be within ``tol``
    of an exceptional point of ``spec``. When several coalescences occur at the
    same loss rate the eigenvectors are ordered by eigenvalue (real, then
    imaginary part) and ``branch`` picks one.
    """
    if not np.isfinite(gamma_c) or gamma_c <= 0:
        raise PreconditionError(f"critical loss rate must be positive, got {gamma_c!r}")
    width = max(0.02 * spec.coupling, 10 * tol)
    lo = max(gamma_c - width, 0.0)
    sw = sweep(lambda g: build_hamiltonian(spec, g), lo, gamma_c + width, 41)
    records = [r for r in find_eps(sw) if abs(r.gamma_c - gamma_c) <= tol]
    if not records:
        raise PreconditionError(f"no exceptional point of this lattice within {tol} of {gamma_c}")
    H = build_hamiltonian(spec, gamma_c)
    w = np.linalg.eigvals(H)
    modes = []
    for rec in sorted(records, key=lambda r: (round(r.eigenvalue.real, 8), round(r.eigenvalue.imag, 8))):
        # the group mean at the requested loss rate is accurate to round-off
        lam = w[np.argsort(np.abs(w - rec.eigenvalue), kind="stable")[:rec.group_size]].mean()
        _, _, Vh = np.linalg.svd(H - lam * np.eye(spec.num_modes))
        modes += [Vh[-1 - j].conj() for j in range(rec.geometric_multiplicity)]
    if not 0 <= branch < len(modes):
        raise ValidationError(f"branch must be in [0, {len(modes)}), got {branch}")
    v = modes[branch] / np.linalg.norm(modes[branch])
    anchors = [m for m in spec.lossless_modes if abs(v[m]) > 1e-8]
    v = v * (abs(v[anchors[0]]) / v[anchors[0]]) if anchors else fix_phase(v)
    return complex(alpha) * v


def evolve_amplitudes(U, a) -> np.ndarray:
    U = np.asarray(U, dtype=complex)
    a = as_amplitudes(a)
    if U.shape != (len(a), len(a)):
        raise ValidationError(f"propagator of shape {U.shape} does not act on {len(a)} modes")
    return U @ a


def project_to_fock(a, basis: FockBasis) -> NPhotonState:
    """Unnormalised N-photon component of the coherent state ``|α_1, ..., α_M⟩``."""
    a = as_amplitudes(a)
    if len(a) != basis.M:
        raise ValidationError(f"{len(a)} amplitudes for a {basis.M}-mode basis")
    n = basis.states
    log_fact = gammaln(n + 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):  # masked 0 * log(0)
        log_abs = np.where(n > 0, n * np.log(np.abs(a)), 0.0)
    phase = np.prod(np.where(n > 0, np.exp(1j * n * np.angle(a)), 1.0), axis=1)
    log_mag = np.sum(log_abs - 0.5 * log_fact, axis=1) - 0.5 * np.sum(np.abs(a) ** 2)
    return NPhotonState(basis, np.exp(log_mag) * phase, normalized=False)


def normalize(state: NPhotonState, threshold: float = UNDERFLOW_THRESHOLD) -> NPhotonState:
    norm2 = state.norm_squared
    if not norm2 > threshold:
        raise PostSelectionError(
            f"N={state.basis.N} component has squared norm {norm2:.3g}, below {threshold:g}"
        )
    return NPhotonState(state.basis, state.coeffs / math.sqrt(norm2), normalized=True)


def postselect(state: NPhotonState, threshold: float = UNDERFLOW_THRESHOLD) -> PhotonDistribution:
    """Detection probabilities of the basis states given exactly N photons arrived."""
    c = normalize(state, threshold).coeffs
    p = np.abs(c) ** 2
    return PhotonDistribution(p / p.sum(), tuple(state.basis.labels))


def evolve_postselected(H_lifted, state: NPhotonState, z: float,
                        method: str = "auto") -> NPhotonState:
    """Propagate N-photon coefficients with ``exp(-iz H_lifted)``; the result is unnormalised."""
    H_lifted = np.asarray(H_lifted, dtype=complex)
    if H_lifted.shape != (len(state.basis),) * 2:
        raise ValidationError(
            f"lifted Hamiltonian of shape {H_lifted.shape} does not match basis size {len(state.basis)}"
        )
    return NPhotonState(state.basis, propagator(H_lifted, z, method) @ state.coeffs, False)


def total_photon_distribution(a, N_max: int | None = None) -> PhotonDistribution:
    """Poisson distribution of the total photon number, truncated at ``N_max``.

    By default ``N_max = ceil(n̄ + 10 sqrt(n̄))``; the probability beyond it is
    returned as ``tail_mass``. For a Poisson law ``E[N; N > N_max]`` equals
    ``n̄ P(N >= N_max)``, which is stored as ``tail_mean``.
    """
    nbar = float(np.sum(np.abs(as_amplitudes(a)) ** 2))
    if N_max is None:
        N_max = math.ceil(nbar + 10 * math.sqrt(nbar))
    if int(N_max) != N_max or N_max < 0:
        raise ValidationError(f"N_max must be an integer >= 0, got {N_max!r}")
    k = np.arange(int(N_max) + 1)
    if nbar == 0:
        p = (k == 0).astype(float)
        return PhotonDistribution(p, tuple(int(x) for x in k), 0.0)
    return PhotonDistribution(poisson.pmf(k, nbar), tuple(int(x) for x in k),
                              float(poisson.sf(N_max, nbar)), nbar * float(poisson.sf(N_max - 1, nbar)))


def mean_photon_number(a) -> float:
    """``n̄ = sum_m |α_m|²``."""
    return float(np.sum(np.abs(as_amplitudes(a)) ** 2))


def mean_photons_in(modes: Sequence[int], state: NPhotonState,
                    threshold: float = UNDERFLOW_THRESHOLD) -> float:
    """Post-selected mean photon number in the (0-based) waveguides ``modes``."""
    modes = list(modes)
    if any(not 0 <= m < state.basis.M for m in modes):
        raise ValidationError(f"mode indices {modes} out of range for M={state.basis.M}")
    p = postselect(state, threshold).probabilities
    return float(state.basis.states[:, modes].sum(axis=1) @ p)


def align_phase(v, reference) -> np.ndarray:
    """Multiply ``v`` by the unit phase that matches ``reference`` on its largest entry."""
    v = np.asarray(v, dtype=complex)
    k = int(np.argmax(np.abs(reference)))
    if v[k] == 0:
        return v
    return v * (reference[k] / abs(reference[k])) / (v[k] / abs(v[k]))


def phase_distance(v, reference) -> float:
    """``||v - reference||`` after removing a global phase from ``v``."""
    return float(np.linalg.norm(align_phase(v, reference) - np.asarray(reference)))


@dataclass(frozen=True)
class PrepRecipe:
    """Lossless launch that produces an exceptional mode."""

    distance: float
    inputs: np.ndarray
    prepared: np.ndarray
    target: np.ndarray
    residual: float


def critical_loss(spec: LatticeSpec) -> float:
    """Critical loss rate of the two geometries with a lossless preparation recipe."""
    g = spec.loss_multipliers
    if spec.boundary == "open" and g == (1.0, 0.0):
        return 2 * spec.coupling
    if spec.boundary == "open" and g == (0.0, 1.0, 0.0):
        return 2 * math.sqrt(2) * spec.coupling
    raise PreconditionError(
        "lossless preparation is only available for the semi-lossy coupler (1, 0) "
        f"and the trimer (0, 1, 0), got loss pattern {g}"
    )


def preparation_residual(spec: LatticeSpec, inputs, distance: float, alpha: complex = 1.0):
    """Evolve ``inputs`` losslessly over ``distance``; return ``(prepared, target, residual)``."""
    prepared = evolve_amplitudes(propagator(build_hamiltonian(spec, 0.0), distance), inputs)
    target = exceptional_mode(spec, critical_loss(spec), alpha)
    return prepared, target, phase_distance(prepared, target)


def prepare_em_lossless(spec: LatticeSpec, alpha: complex = 1.0, stage_gamma: float = 0.0,
                        tol: float = 1e-8) -> PrepRecipe:
    """Lossless recipe that turns a single-waveguide launch into the exceptional mode.

    Coupler: launch ``(0, α)`` and stop at ``π/(4κ)``, the 50/50 point. Trimer:
    launch ``(0, α, 0)`` into the centre and stop at ``3π/(4√2κ)``. The recipe
    is checked against the exceptional mode up to a global phase.
    """
    if stage_gamma != 0:
        raise ValidationError(f"the preparation stage must be lossless, got gamma={stage_gamma}")
    critical_loss(spec)
    kappa = spec.coupling
    if spec.num_modes == 2:
        distance, inputs = math.pi / (4 * kappa), np.array([0, alpha], dtype=complex)
    else:
        distance, inputs = 3 * math.pi / (4 * math.sqrt(2) * kappa), np.array([0, alpha, 0], dtype=complex)
    prepared, target, residual = preparation_residual(spec, inputs, distance, alpha)
    if not residual <= tol * max(1.0, abs(alpha)):
        raise NumericError(f"preparation recipe misses the exceptional mode by {residual:.3g}")
    return PrepRecipe(distance, inputs, prepared, target, residual)
