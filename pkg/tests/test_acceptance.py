"""Acceptance checks, one per criterion, each printing a PASS/FAIL line.

Run ``python tests/test_acceptance.py`` for the summary alone, or through pytest
where every criterion is its own test.
"""

import json
import math
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest
from scipy.optimize import brentq, linear_sum_assignment

from epsim.cli import COMMANDS, main
from epsim.coherent import (
    evolve_postselected,
    exceptional_mode,
    mean_photon_number,
    postselect,
    project_to_fock,
)
from epsim.exceptional import (
    count_multifurcation_points,
    count_points_with_branching,
    locate_eps,
    multifurcation_points,
)
from epsim.fock import enumerate_basis, lift_hamiltonian, lifted_eigenvalue_sums
from epsim.lattice import (
    LatticeSpec,
    build_hamiltonian,
    closed_form_critical,
    closed_form_supercritical,
    propagator,
)
from epsim.sensing import SensingSetup, sensitivity_slope

CONFIGS = Path(__file__).resolve().parents[1] / "demos" / "configs"
COUPLER = LatticeSpec.coupler(1.0)
ALPHA = math.sqrt(20)
EM_UNIT = np.array([1j, 1]) / math.sqrt(2)


def _closed_form(gamma, z):
    return closed_form_critical(1.0, gamma, z) if gamma == 2 else closed_form_supercritical(1.0, gamma, z)


def _nbar(gamma, z, alpha=ALPHA):
    return float(np.sum(np.abs(_closed_form(gamma, z) @ (alpha * EM_UNIT)) ** 2))


def _cli(command, config, out, *overrides):
    args = [command, "--config", str(config), "--out", str(out)]
    for o in overrides:
        args += ["--override", o]
    return main(args)


def check_two_mode_ep():
    eps = locate_eps(lambda g: build_hamiltonian(COUPLER, g), 0.0, 4.0)
    ok = (
        len(eps) == 1
        and abs(eps[0].gamma_c - 2) <= 1e-6
        and eps[0].order_estimate == 2
        and abs(eps[0].scaling_exponent - 0.5) <= 0.02
    )
    detail = ", ".join(
        f"gamma_c={e.gamma_c:.10f} order={e.order_estimate} exponent={e.scaling_exponent:.5f}" for e in eps
    )
    return ok, f"{len(eps)} EP(s): {detail}"


def check_transparency():
    def transmission(gamma):
        return float(np.sum(np.abs(propagator(build_hamiltonian(COUPLER, gamma), 1.0) @ EM_UNIT) ** 2))

    ic, isc = transmission(2.0), transmission(4.0)
    ok = (
        abs(ic - math.exp(-2)) < 1e-12
        and abs(ic / 0.1348 - 1) <= 0.01
        and abs(isc / 0.2011 - 1) <= 0.005
        and abs(isc / ic / 1.5 - 1) <= 0.02
    )
    return ok, f"I_c={ic:.6f} (e^-2={math.exp(-2):.6f}, printed 0.1348), I_sc={isc:.6f}, ratio={isc / ic:.4f}"


def check_crossing():
    zc = brentq(lambda z: _nbar(2.0, z) - _nbar(4.0, z), 0.1, 2.0, xtol=1e-12)
    # the propagator path must cross at the same place
    def via_propagator(gamma, z):
        return mean_photon_number(propagator(build_hamiltonian(COUPLER, gamma), z) @ (ALPHA * EM_UNIT))

    zc2 = brentq(lambda z: via_propagator(2.0, z) - via_propagator(4.0, z), 0.1, 2.0, xtol=1e-12)
    ok = abs(zc - 0.68) <= 0.01 and abs(zc - zc2) < 1e-9
    return ok, f"z_c={zc:.6f} (closed form), {zc2:.6f} (propagator)"


def check_mean_photons():
    nc, nsc = _nbar(2.0, 1.0), _nbar(4.0, 1.0)
    em = exceptional_mode(COUPLER, 2.0, ALPHA)
    lib = [mean_photon_number(propagator(build_hamiltonian(COUPLER, g), 1.0) @ em) for g in (2.0, 4.0)]
    ok = (
        abs(nc / 2.70 - 1) <= 0.01
        and abs(nsc / 4.02 - 1) <= 0.01
        and np.allclose(lib, [nc, nsc], rtol=1e-12)
    )
    return ok, f"n_c={nc:.4f}, n_sc={nsc:.4f}"


def check_six_photon_statistics():
    basis = enumerate_basis(6, 2)
    em = exceptional_mode(COUPLER, 2.0, ALPHA)
    p0 = postselect(project_to_fock(em, basis)).probabilities
    out = propagator(build_hamiltonian(COUPLER, 4.0), 2.5) @ em
    p6 = postselect(project_to_fock(out, basis)).probabilities[basis.index_of((0, 6))]
    enhancement = p6 / p0[6]
    ok = (
        abs(p0[3] - 20 / 64) < 1e-12
        and abs(p0[6] - 1 / 64) < 1e-12
        and abs(p6 - 0.660) <= 0.01
        and abs(enhancement - 44) <= 2
    )
    return ok, f"P3(0)={p0[3]:.12f}, P6(0)={p0[6]:.12f}, P6(2.5)={p6:.6f}, enhancement={enhancement:.3f}"


def check_critical_constancy():
    em = exceptional_mode(COUPLER, 2.0, ALPHA)
    H = build_hamiltonian(COUPLER, 2.0)
    worst = 0.0
    for N in range(1, 7):
        basis = enumerate_basis(N, 2)
        Hn = lift_hamiltonian(H, basis)
        start = project_to_fock(em, basis)
        ref = postselect(start).probabilities
        for z in np.linspace(0.0, 2.5, 26):
            p = postselect(evolve_postselected(Hn, start, z)).probabilities
            worst = max(worst, 0.5 * np.abs(p - ref).sum())
    return worst < 1e-8, f"max total variation over N=1..6, z in [0, 2.5]: {worst:.2e}"


def check_multiwaveguide_eps():
    trimer = LatticeSpec.trimer()
    tetra = LatticeSpec.tetramer()
    hexa = LatticeSpec.hexagon()
    t = [e.gamma_c for e in locate_eps(lambda g: build_hamiltonian(trimer, g), 0.0, 4.0)]
    q = [e.gamma_c for e in locate_eps(lambda g: build_hamiltonian(tetra, g), 0.0, 4.0)]
    h = locate_eps(lambda g: build_hamiltonian(hexa, g), 0.0, 4.0)
    t_exp = 2 * math.sqrt(2) * trimer.coupling
    q_exp = sorted(math.sqrt(6 + s * 2 * math.sqrt(5)) * tetra.coupling for s in (-1, 1))
    ok = (
        len(t) == 1 and abs(t[0] - t_exp) <= 1e-6
        and len(q) == 2 and all(abs(a - b) <= 1e-6 for a, b in zip(q, q_exp))
        and len(h) == 2 and all(e.order_estimate == 2 for e in h)
    )
    hex_txt = ", ".join(f"{e.gamma_c:.8f} blocks {e.jordan_blocks}" for e in h)
    return ok, f"trimer {t}, tetramer {[round(x, 9) for x in q]}, hexagon [{hex_txt}]"


def check_eigenvalue_sums():
    rng = np.random.default_rng(2024)
    lattices = {
        "coupler": (COUPLER, [2.0]),
        "trimer": (LatticeSpec.trimer(), [2.0]),
        "tetramer": (LatticeSpec.tetramer(), [0.874032, 2.288246]),
        "hexagon": (LatticeSpec.hexagon(), [math.sqrt(2), 2 * math.sqrt(2)]),
    }
    worst = 0.0
    for spec, eps in lattices.values():
        gammas = []
        while len(gammas) < 10:
            g = rng.uniform(0, 4)
            if min(abs(g - e) for e in eps) > 0.05:
                gammas.append(g)
        for g in gammas:
            H1 = build_hamiltonian(spec, g)
            lam = np.linalg.eigvals(H1)
            for N in range(1, 5):
                basis = enumerate_basis(N, spec.num_modes)
                got = np.linalg.eigvals(lift_hamiltonian(H1, basis))
                want = lifted_eigenvalue_sums(lam, basis)
                cost = np.abs(got[:, None] - want[None, :])
                r, c = linear_sum_assignment(cost)
                worst = max(worst, cost[r, c].max())
    return worst < 1e-8, f"max matched deviation {worst:.2e} over 4 lattices, N<=4, 10 loss rates"


def check_commutation():
    rng = np.random.default_rng(7)
    worst = 0.0
    for M in range(2, 5):
        spec = LatticeSpec.alternating(M, 1 / math.sqrt(2), first_lossy=True)
        for N in range(1, 5):
            basis = enumerate_basis(N, M)
            for g in rng.uniform(0, 5, 5):
                H = build_hamiltonian(spec, g)
                Hn = lift_hamiltonian(H, basis)
                a = rng.normal(size=M) + 1j * rng.normal(size=M)
                for z in (0.3, 1.0):
                    p_amp = postselect(project_to_fock(propagator(H, z) @ a, basis)).probabilities
                    p_lift = postselect(evolve_postselected(Hn, project_to_fock(a, basis), z)).probabilities
                    worst = max(worst, np.abs(p_amp - p_lift).max())
    return worst < 1e-10, f"max probability difference {worst:.2e} (M<=4, N<=4, 5 loss rates, z in 0.3, 1.0)"


def check_counting():
    a = count_multifurcation_points(2, 3) == 3
    orders = sorted(count_points_with_branching(2, k, 3)[1] for k in range(3)
                    if count_points_with_branching(2, k, 3)[0])
    numeric = sorted(m for _, m in multifurcation_points(
        lift_hamiltonian(build_hamiltonian(LatticeSpec.trimer(), 2.0), enumerate_basis(2, 3))))
    b = orders == numeric == [1, 2, 3]
    two_mode = []
    for N in range(1, 7):
        eps = locate_eps(lambda g, N=N: lift_hamiltonian(build_hamiltonian(COUPLER, g), enumerate_basis(N, 2)),
                         0.0, 4.0, steps=201)
        two_mode.append(len(eps) == 1 and eps[0].order_estimate == N + 1
                        and count_points_with_branching(N, N, 2) == (1, N + 1))
    hockey = all(
        sum(count_points_with_branching(N, k, M)[0] for k in range(N + 1)) == count_multifurcation_points(N, M)
        for N in range(1, 6) for M in range(3, 7)
    )
    ok = a and b and all(two_mode) and hockey
    return ok, f"(N=2,M=3) orders {numeric}; two-mode order N+1 for N<=6: {all(two_mode)}; hockey-stick: {hockey}"


def check_sensitivity():
    em = exceptional_mode(COUPLER, 2.0, ALPHA)
    per = []
    for N in (2, 4, 6):
        s = SensingSetup(COUPLER, em, 1.5, "mean_photons_in", N, (1,), critical_gamma=2.0)
        per.append(sensitivity_slope(s, 2.0).value / N)
    spread = max(per) / min(per) - 1
    s1 = sensitivity_slope(SensingSetup(COUPLER, em, 1.5, critical_gamma=2.0), 2.0).value
    s2 = sensitivity_slope(SensingSetup(COUPLER, em * math.sqrt(2), 1.5, critical_gamma=2.0), 2.0).value
    ok = spread <= 0.10 and abs(s2 / s1 - 2) < 1e-6
    return ok, f"slope/N = {[round(x, 6) for x in per]}, classical slope ratio at double power {s2 / s1:.6f}"


def check_state_preparation():
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        cfg = CONFIGS / "trimer_prep_check.json"
        codes = [
            _cli("prep-check", cfg, tmp / "coupler", "lattice.preset=coupler"),
            _cli("prep-check", cfg, tmp / "trimer",
                 f"distance={float(math.pi / (4 * math.sqrt(2) * LatticeSpec.trimer().coupling))!r}"),
        ]
        res = [json.loads((tmp / n / "prep-check.meta.json").read_text())["residual"] for n in ("coupler", "trimer")]
    ok = codes == [0, 0] and all(r < 1e-8 for r in res)
    return ok, f"residual coupler (pi/4kappa) {res[0]:.2e}, trimer at pi/(4 sqrt2 kappa) {res[1]:.6f}"


def check_determinism():
    runs = {
        "spectrum": "trimer_spectrum.json",
        "evolve": "coupler_evolve.json",
        "postselect": "coupler_postselect.json",
        "sense": "coupler_sense.json",
        "fock-graph": "trimer_fock_graph.json",
        "prep-check": "trimer_prep_check.json",
    }
    same = []
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        for cmd in COMMANDS:
            outs = [tmp / f"{cmd}{k}" for k in (0, 1)]
            codes = [_cli(cmd, CONFIGS / runs[cmd], o) for o in outs]
            files = sorted(p.name for p in outs[0].iterdir())
            same.append(codes == [0, 0] and all(
                (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes() for f in files))
    return all(same), f"byte-identical for {sum(same)}/{len(COMMANDS)} commands"


CRITERIA = [
    (1, "two-mode EP location", check_two_mode_ep),
    (2, "loss-induced transparency", check_transparency),
    (3, "crossing point", check_crossing),
    (4, "mean photon numbers", check_mean_photons),
    (5, "post-selected 6-photon statistics", check_six_photon_statistics),
    (6, "critical-point constancy", check_critical_constancy),
    (7, "multi-waveguide EPs", check_multiwaveguide_eps),
    (8, "eigenvalue-sum oracle", check_eigenvalue_sums),
    (9, "projection-evolution commutation", check_commutation),
    (10, "counting identities", check_counting),
    (11, "sensitivity scaling", check_sensitivity),
    (12, "state preparation", check_state_preparation),
    (13, "determinism", check_determinism),
]


def _line(num, title, ok, detail):
    return f"{'PASS' if ok else 'FAIL'}  [{num:2d}] {title}: {detail}"


@pytest.mark.parametrize("num,title,check", CRITERIA, ids=[t.replace(" ", "_") for _, t, _ in CRITERIA])
def test_criterion(num, title, check, capsys):
    ok, detail = check()
    with capsys.disabled():
        print("\n" + _line(num, title, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    results = [(n, t, *c()) for n, t, c in CRITERIA]
    for n, t, ok, detail in results:
        print(_line(n, t, ok, detail))
    sys.exit(0 if all(r[2] for r in results) else 1)
