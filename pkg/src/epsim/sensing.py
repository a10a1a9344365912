"""Loss sensing with classical intensities and post-selected photon counts."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .coherent import as_amplitudes, mean_photon_number, mean_photons_in, project_to_fock
from .errors import ValidationError
from .fock import enumerate_basis
from .lattice import LatticeSpec, build_hamiltonian, propagator

OBSERVABLES = ("mean_total_photons", "mean_photons_in")


@dataclass(frozen=True)
class SensingSetup:
    """A lattice probed at fixed length ``z_f`` with a fixed coherent input.

    ``observable`` is ``"mean_total_photons"`` (the classical n̄) or
    ``"mean_photons_in"``, the post-selected mean photon number in ``modes``
    given ``N`` detected photons.
    """

    spec: LatticeSpec
    amplitudes: np.ndarray
    z_f: float = 1.5
    observable: str = "mean_total_photons"
    N: int | None = None
    modes: tuple[int, ...] = ()
    critical_gamma: float | None = None
    _basis: object = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "amplitudes", as_amplitudes(self.amplitudes))
        if len(self.amplitudes) != self.spec.num_modes:
            raise ValidationError("one amplitude per waveguide is required")
        if self.observable not in OBSERVABLES:
            raise ValidationError(f"observable must be one of {OBSERVABLES}, got {self.observable!r}")
        if not np.isfinite(self.z_f) or self.z_f < 0:
            raise ValidationError(f"z_f must be finite and >= 0, got {self.z_f!r}")
        if self.observable == "mean_photons_in":
            if self.N is None or not self.modes:
                raise ValidationError("mean_photons_in needs a photon number N and a set of modes")
            object.__setattr__(self, "modes", tuple(int(m) for m in self.modes))
            object.__setattr__(self, "_basis", enumerate_basis(self.N, self.spec.num_modes))

    def output_amplitudes(self, gamma: float) -> np.ndarray:
        U = propagator(build_hamiltonian(self.spec, gamma), self.z_f)
        return U @ self.amplitudes

    def evaluate(self, gamma: float) -> float:
        out = self.output_amplitudes(gamma)
        if self.observable == "mean_total_photons":
            return mean_photon_number(out)
        return mean_photons_in(self.modes, project_to_fock(out, self._basis))


class Slope(NamedTuple):
    value: float
    scheme: str  # "central" or "forward"


def sensitivity_slope(setup: SensingSetup, gamma0: float, delta: float = 1e-4) -> Slope:
    """Finite-difference slope of the observable with respect to the loss rate.

    Central differences are used except at the critical working point (or when
    ``gamma0 - delta`` would be negative), where a forward difference is taken
    so the stencil stays on one side of the exceptional point.
    """
    if not delta > 0:
        raise ValidationError(f"delta must be positive, got {delta!r}")
    at_critical = setup.critical_gamma is not None and np.isclose(
        gamma0, setup.critical_gamma, rtol=0, atol=1e-12
    )
    if at_critical or gamma0 - delta < 0:
        f0, f1 = setup.evaluate(gamma0), setup.evaluate(gamma0 + delta)
        return Slope((f1 - f0) / delta, "forward")
    fm, fp = setup.evaluate(gamma0 - delta), setup.evaluate(gamma0 + delta)
    return Slope((fp - fm) / (2 * delta), "central")
