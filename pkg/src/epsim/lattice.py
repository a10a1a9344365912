"""Single-photon Hamiltonians of lossy waveguide lattices and their propagators.

Convention
----------
The field amplitudes obey ``dα/dz = -i H α`` with

    H[m, m]   = β - i g_m Γ
    H[m, m±1] = -κ

which is the usual coupled-mode system ``dα_m/dz = iκ(α_{m-1} + α_{m+1}) - g_m Γ α_m``
(up to the uniform phase β). With this choice ``exp(-izH)`` for the semi-lossy
coupler equals the textbook closed forms

    U_c(z)  = e^{-Γz/2} [[1 - κz, iκz], [iκz, 1 + κz]]                (Γ = 2κ)
    U_sc(z) = e^{-Γz/2} [sinh(θz)/(2θ) [[-Γ, 2iκ], [2iκ, Γ]] + cosh(θz) I]

entry by entry, the eigenvalues are ``-iΓ/2 ± sqrt(κ² - Γ²/4)`` and the exceptional
mode is ``(i, 1)/√2``. The sign of the hopping is a gauge choice on bipartite
lattices and does not affect any intensity or photon-number statistic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import expm

from .errors import NumericError, PreconditionError, ValidationError

#: eigenvector-matrix condition number above which a matrix is treated as defective
DEFECTIVE_CONDITION = 1e6


@dataclass(frozen=True)
class LatticeSpec:
    """Geometry and material parameters of a coupled-waveguide lattice.

    Parameters
    ----------
    num_modes : int
        Number of waveguides ``M``.
    coupling : float
        Nearest-neighbour coupling ``κ > 0`` (inverse length).
    loss_multipliers : sequence of float
        ``g_m ≥ 0``; the loss of waveguide ``m`` is ``g_m Γ``.
    propagation_constant : float
        Uniform propagation constant ``β``.
    boundary : {"open", "periodic"}
    """

    num_modes: int
    coupling: float
    loss_multipliers: tuple[float, ...]
    propagation_constant: float = 0.0
    boundary: str = "open"

    def __post_init__(self):
        object.__setattr__(
            self, "loss_multipliers", tuple(float(g) for g in self.loss_multipliers)
        )
        M = self.num_modes
        if int(M) != M or M < 2:
            raise ValidationError(f"num_modes must be an integer >= 2, got {M!r}")
        if not np.isfinite(self.coupling) or self.coupling <= 0:
            raise ValidationError(f"coupling must be positive and finite, got {self.coupling!r}")
        if not np.isfinite(self.propagation_constant):
            raise ValidationError("propagation_constant must be finite")
        if len(self.loss_multipliers) != M:
            raise ValidationError(
                f"expected {M} loss multipliers, got {len(self.loss_multipliers)}"
            )
        if any(not np.isfinite(g) or g < 0 for g in self.loss_multipliers):
            raise ValidationError("loss multipliers must be finite and >= 0 (no gain)")
        if self.boundary not in ("open", "periodic"):
            raise ValidationError(f"boundary must be 'open' or 'periodic', got {self.boundary!r}")
        if self.boundary == "periodic" and M < 3:
            raise ValidationError("a periodic lattice needs at least 3 waveguides")

    @property
    def lossless_modes(self) -> tuple[int, ...]:
        """Indices of waveguides without loss (the "neutral" guides)."""
        return tuple(m for m, g in enumerate(self.loss_multipliers) if g == 0)

    @classmethod
    def alternating(cls, num_modes, coupling, first_lossy, boundary="open"):
        g = [float((m % 2 == 0) == first_lossy) for m in range(num_modes)]
        return cls(num_modes, coupling, g, boundary=boundary)

    @classmethod
    def m_config(cls, num_modes, coupling=1 / np.sqrt(2)):
        """Open chain with every second guide lossy, outer guides neutral: (0, 1, 0, ...)."""
        return cls.alternating(num_modes, coupling, first_lossy=False)

    @classmethod
    def w_config(cls, num_modes, coupling=1 / np.sqrt(2)):
        """Open chain starting with a lossy guide: (1, 0, 1, ...)."""
        return cls.alternating(num_modes, coupling, first_lossy=True)

    @classmethod
    def coupler(cls, coupling=1.0):
        """Semi-lossy two-waveguide beam splitter, lossy guide first."""
        return cls(2, coupling, (1.0, 0.0))

    @classmethod
    def trimer(cls, coupling=1 / np.sqrt(2)):
        return cls.m_config(3, coupling)

    @classmethod
    def tetramer(cls, coupling=1 / np.sqrt(2)):
        return cls.w_config(4, coupling)

    @classmethod
    def hexagon(cls, coupling=1 / np.sqrt(2)):
        """Ring of six guides with three alternating lossy ones."""
        return cls.alternating(6, coupling, first_lossy=True, boundary="periodic")


def build_hamiltonian(spec: LatticeSpec, gamma: float) -> np.ndarray:
    """Return the ``M x M`` single-photon Hamiltonian at loss rate ``gamma``."""
    if not np.isfinite(gamma) or gamma < 0:
        raise ValidationError(f"gamma must be finite and >= 0, got {gamma!r}")
    M = spec.num_modes
    g = np.asarray(spec.loss_multipliers)
    H = np.diag(spec.propagation_constant - 1j * g * gamma).astype(complex)
    hops = [(m, m + 1) for m in range(M - 1)]
    if spec.boundary == "periodic":
        hops.append((M - 1, 0))
    for a, b in hops:
        H[a, b] = H[b, a] = -spec.coupling
    return H


class Eigensystem(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray
    condition: float
    defective: bool


def _check_square_finite(H):
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise NumericError("matrix has non-finite entries")
    return H


def fix_phase(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Rotate ``v`` so that its first non-negligible entry is real and positive."""
    scale = np.max(np.abs(v))
    if scale == 0:
        return v
    k = int(np.argmax(np.abs(v) > tol * scale))
    return v * (abs(v[k]) / v[k])


def eigendecompose(H, cond_threshold: float = DEFECTIVE_CONDITION) -> Eigensystem:
    """Eigenvalues and unit right eigenvectors with deterministic order and phase.

    Eigenvalues are sorted by real part, then imaginary part. Each eigenvector
    column has unit norm with its first non-zero entry real and positive. The
    matrix is flagged ``defective`` when the condition number of the eigenvector
    matrix exceeds ``cond_threshold``.
    """
    H = _check_square_finite(H)
    w, V = np.linalg.eig(H)
    order = np.lexsort((np.round(w.imag, 10), np.round(w.real, 10)))
    w, V = w[order], V[:, order]
    V = V / np.linalg.norm(V, axis=0)
    V = np.column_stack([fix_phase(V[:, k]) for k in range(V.shape[1])])
    cond = float(np.linalg.cond(V))
    if not np.isfinite(cond):
        cond = np.inf
    return Eigensystem(w, V, cond, cond > cond_threshold)


def propagator(H, z: float, method: str = "auto", cond_threshold: float = DEFECTIVE_CONDITION):
    """Return ``exp(-i z H)``.

    ``method`` is ``"eigendecomposition"``, ``"scaling-and-squaring"`` or ``"auto"``;
    the latter diagonalises unless the eigenvector matrix is worse conditioned than
    ``cond_threshold``, which happens at and near exceptional points.
    """
    if not np.isfinite(z) or z < 0:
        raise ValidationError(f"propagation distance must be finite and >= 0, got {z!r}")
    H = _check_square_finite(H)
    if method not in ("auto", "eigendecomposition", "scaling-and-squaring"):
        raise ValidationError(f"unknown propagator method {method!r}")
    if z == 0:
        return np.eye(H.shape[0], dtype=complex)

    use_eig = method == "eigendecomposition"
    if method == "auto":
        w, V = np.linalg.eig(H)
        use_eig = np.linalg.cond(V) < cond_threshold
    if use_eig:
        if method != "auto":
            w, V = np.linalg.eig(H)
        with np.errstate(over="raise", invalid="raise"):
            try:
                U = np.linalg.solve(V.T, (V * np.exp(-1j * z * w)).T).T
            except FloatingPointError as exc:
                raise NumericError(f"overflow evaluating exp(-izH) at z={z}") from exc
    else:
        with np.errstate(over="ignore", invalid="ignore"):
            U = expm(-1j * z * H)
    if not np.all(np.isfinite(U)):
        raise NumericError(f"exp(-izH) is not finite at z={z} (norm of H {np.linalg.norm(H):.3g})")
    return U


def closed_form_critical(coupling: float, gamma: float, z: float) -> np.ndarray:
    """Propagator of the semi-lossy coupler exactly at its exceptional point Γ = 2κ."""
    if not np.isclose(gamma, 2 * coupling, rtol=1e-12, atol=0):
        raise PreconditionError(f"critical closed form needs gamma == 2*coupling, got {gamma}, {coupling}")
    if z < 0:
        raise ValidationError("z must be >= 0")
    kz = coupling * z
    return np.exp(-gamma * z / 2) * np.array([[1 - kz, 1j * kz], [1j * kz, 1 + kz]])


def closed_form_supercritical(coupling: float, gamma: float, z: float) -> np.ndarray:
    """Propagator of the semi-lossy coupler beyond its exceptional point (Γ > 2κ)."""
    if not gamma > 2 * coupling:
        raise PreconditionError(f"super-critical closed form needs gamma > 2*coupling, got {gamma}")
    if z < 0:
        raise ValidationError("z must be >= 0")
    theta = np.sqrt(gamma**2 - 4 * coupling**2) / 2
    K = np.array([[-gamma, 2j * coupling], [2j * coupling, gamma]])
    return np.exp(-gamma * z / 2) * (
        np.sinh(theta * z) / (2 * theta) * K + np.cosh(theta * z) * np.eye(2)
    )
