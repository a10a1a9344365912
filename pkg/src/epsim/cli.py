"""Command-line front end.

    epsim <spectrum|evolve|postselect|sense|fock-graph|prep-check> --config run.json
          [--out DIR] [--override key=value ...]

Every command writes ``<out>/<command>.csv`` (post-selection writes one
``postselect_N<N>.csv`` per photon number) and ``<out>/<command>.meta.json``;
``fock-graph`` also writes ``<out>/fock-graph.dot``. Numbers are printed with 12
significant digits so repeated runs are byte-identical.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .coherent import (
    critical_loss,
    exceptional_mode,
    postselect,
    prepare_em_lossless,
    preparation_residual,
    project_to_fock,
    total_photon_distribution,
)
from .errors import (
    CapacityError,
    EpsimError,
    NumericError,
    PostSelectionError,
    PreconditionError,
    ValidationError,
)
from .exceptional import find_eps, sweep
from .fock import enumerate_basis, export_fock_graph, lift_hamiltonian
from .lattice import LatticeSpec, build_hamiltonian, eigendecompose, propagator
from .sensing import SensingSetup, sensitivity_slope

COMMANDS = ("spectrum", "evolve", "postselect", "sense", "fock-graph", "prep-check")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CAPACITY = 0, 2, 3, 4

CONVENTION = (
    "H[m,m] = beta - i g_m Gamma, H[m,m+1] = H[m+1,m] = -kappa, U(z) = exp(-i z H); "
    "modes are 0-based; Fock states in colex order"
)

PRESETS = {
    "coupler": LatticeSpec.coupler,
    "trimer": LatticeSpec.trimer,
    "tetramer": LatticeSpec.tetramer,
    "hexagon": LatticeSpec.hexagon,
}


class ConfigError(ValidationError):
    pass


def _fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{0.0 if x == 0 else x:.12g}"


def _json_float(x):
    x = float(x)
    return float(_fmt(x)) if math.isfinite(x) else None


# --------------------------------------------------------------------------- config


def load_config(path) -> dict:
    text = Path(path).read_text()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return cfg


def apply_overrides(cfg: dict, overrides) -> dict:
    """Set dotted ``key=value`` pairs; values are parsed as JSON when possible."""
    cfg = copy.deepcopy(cfg)
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        parts = key.split(".")
        for p in parts[:-1]:
            if not isinstance(node.get(p), dict):
                node[p] = {}
            node = node[p]
        node[parts[-1]] = value
    return cfg


def _number(cfg, key, default=None, positive=False, nonneg=False):
    v = cfg.get(key, default)
    if v is None:
        raise ConfigError(f"field '{key}' is required")
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"field '{key}' must be a finite number, got {v!r}")
    if positive and v <= 0:
        raise ConfigError(f"field '{key}' must be > 0, got {v!r}")
    if nonneg and v < 0:
        raise ConfigError(f"field '{key}' must be >= 0, got {v!r}")
    return float(v)


def parse_lattice(cfg) -> LatticeSpec:
    lat = cfg.get("lattice")
    if not isinstance(lat, dict):
        raise ConfigError("field 'lattice' must be an object")
    try:
        if "preset" in lat:
            if lat["preset"] not in PRESETS:
                raise ConfigError(f"field 'lattice.preset' must be one of {sorted(PRESETS)}")
            kw = {"coupling": lat["coupling"]} if "coupling" in lat else {}
            spec = PRESETS[lat["preset"]](**kw)
            if "propagation_constant" in lat:
                spec = LatticeSpec(spec.num_modes, spec.coupling, spec.loss_multipliers,
                                   lat["propagation_constant"], spec.boundary)
            return spec
        return LatticeSpec(
            num_modes=lat["num_modes"],
            coupling=lat["coupling"],
            loss_multipliers=tuple(lat["loss_multipliers"]),
            propagation_constant=lat.get("propagation_constant", 0.0),
            boundary=lat.get("boundary", "open"),
        )
    except KeyError as exc:
        raise ConfigError(f"field 'lattice.{exc.args[0]}' is required") from exc
    except (TypeError, ValidationError) as exc:
        raise ConfigError(f"field 'lattice': {exc}") from exc


def parse_grid(cfg, key, default=None, allow_negative=False) -> np.ndarray:
    """A single number or ``{min, max, steps}``."""
    v = cfg.get(key, default)
    if v is None:
        raise ConfigError(f"field '{key}' is required")
    if isinstance(v, dict):
        lo, hi = _number(v, "min"), _number(v, "max")
        steps = v.get("steps", 2 if hi > lo else 1)
        if isinstance(steps, bool) or not isinstance(steps, int) or steps < 1:
            raise ConfigError(f"field '{key}.steps' must be a positive integer")
        if hi < lo or (hi > lo and steps < 2):
            raise ConfigError(f"field '{key}' needs min <= max and at least 2 steps for a range")
        grid = np.linspace(lo, hi, steps) if hi > lo else np.array([lo])
    else:
        grid = np.array([_number(cfg, key, default)])
    if not allow_negative and np.any(grid < 0):
        raise ConfigError(f"field '{key}' must be >= 0")
    return grid


def parse_alpha(cfg, default_power=20.0) -> complex:
    v = cfg.get("alpha")
    if v is None:
        return complex(math.sqrt(default_power))
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(_number(cfg, "alpha", nonneg=True))
    if isinstance(v, dict):
        mag = _number(v, "magnitude", nonneg=True)
        return mag * complex(math.cos(_number(v, "phase", 0.0)), math.sin(_number(v, "phase", 0.0)))
    raise ConfigError("field 'alpha' must be a number or {magnitude, phase}")


def parse_photon_numbers(cfg, default=None) -> list[int]:
    v = cfg.get("photon_numbers", default)
    if isinstance(v, int) and not isinstance(v, bool):
        v = [v]
    if not isinstance(v, list) or not v or any(
        isinstance(n, bool) or not isinstance(n, int) or n < 0 for n in v
    ):
        raise ConfigError("field 'photon_numbers' must be a non-empty list of integers >= 0")
    return sorted(set(v))


def parse_input(cfg, spec, alpha) -> np.ndarray:
    """Input amplitudes: the exceptional mode (default) or an explicit shape scaled by alpha."""
    v = cfg.get("input", "exceptional_mode")
    if v == "exceptional_mode":
        gc = cfg.get("critical_gamma")
        try:
            gc = critical_loss(spec) if gc is None else _number(cfg, "critical_gamma", positive=True)
            return exceptional_mode(spec, gc, alpha, branch=int(cfg.get("branch", 0)))
        except ValidationError as exc:
            raise ConfigError(f"field 'input': {exc}") from exc
    if isinstance(v, list) and len(v) == spec.num_modes:
        try:
            return alpha * np.array([complex(*c) if isinstance(c, list) else complex(c) for c in v])
        except (TypeError, ValueError) as exc:
            raise ConfigError("field 'input' entries must be numbers or [re, im] pairs") from exc
    raise ConfigError(f"field 'input' must be 'exceptional_mode' or a list of {spec.num_modes} amplitudes")


def _spec_dict(spec: LatticeSpec) -> dict:
    return {
        "num_modes": spec.num_modes,
        "coupling": spec.coupling,
        "loss_multipliers": list(spec.loss_multipliers),
        "propagation_constant": spec.propagation_constant,
        "boundary": spec.boundary,
    }


def _complex_list(v):
    return [[_json_float(c.real), _json_float(c.imag)] for c in np.asarray(v, dtype=complex)]


# --------------------------------------------------------------------------- commands


def cmd_spectrum(cfg):
    spec = parse_lattice(cfg)
    grid = parse_grid(cfg, "gamma")
    N = cfg.get("photon_number", 1)
    if isinstance(N, bool) or not isinstance(N, int) or N < 1:
        raise ConfigError("field 'photon_number' must be an integer >= 1")
    basis = enumerate_basis(N, spec.num_modes) if N > 1 else None

    def builder(g):
        H = build_hamiltonian(spec, g)
        return H if basis is None else lift_hamiltonian(H, basis)

    extra = {"lattice_resolved": _spec_dict(spec), "photon_number": N}
    if len(grid) == 1:
        branches = eigendecompose(builder(float(grid[0]))).values[None, :]
    else:
        sw = sweep(builder, float(grid[0]), float(grid[-1]), len(grid))
        branches = sw.branches
        extra["exceptional_points"] = [
            {
                "gamma_c": _json_float(r.gamma_c),
                "eigenvalue": [_json_float(r.eigenvalue.real), _json_float(r.eigenvalue.imag)],
                "order": r.order_estimate,
                "group_size": r.group_size,
                "jordan_blocks": list(r.jordan_blocks),
                "scaling_exponent": _json_float(r.scaling_exponent),
                "eigenvector_overlap": _json_float(r.eigenvector_overlap),
                "classified": r.classified,
            }
            for r in find_eps(sw)
        ]
    K = branches.shape[1]
    cols = ["gamma"] + [f"branch_{k}_{p}" for k in range(K) for p in ("re", "im")]
    rows = [[g] + [x for v in row for x in (v.real, v.imag)] for g, row in zip(grid, branches)]
    return {"spectrum.csv": (cols, rows)}, extra


def cmd_evolve(cfg):
    spec = parse_lattice(cfg)
    gamma = _number(cfg, "gamma", nonneg=True)
    zs = parse_grid(cfg, "z")
    alpha = parse_alpha(cfg)
    a0 = parse_input(cfg, spec, alpha)
    Ns = parse_photon_numbers(cfg, []) if cfg.get("photon_numbers") else []
    H = build_hamiltonian(spec, gamma)
    n0 = float(np.sum(np.abs(a0) ** 2))
    M = spec.num_modes
    cols = (["z"] + [f"intensity_{m}" for m in range(M)]
            + ["total_intensity", "transmission", "poisson_mean"] + [f"poisson_N{N}" for N in Ns])
    rows = []
    for z in zs:
        a = propagator(H, float(z)) @ a0
        inten = np.abs(a) ** 2
        total = float(inten.sum())
        dist = total_photon_distribution(a, max(Ns, default=0))
        rows.append([z, *inten, total, total / n0 if n0 > 0 else float("nan"), dist.mean(),
                     *[dist.probabilities[N] for N in Ns]])
    return {"evolve.csv": (cols, rows)}, {"input_amplitudes": _complex_list(a0)}


def cmd_postselect(cfg):
    spec = parse_lattice(cfg)
    gamma = _number(cfg, "gamma", nonneg=True)
    zs = parse_grid(cfg, "z")
    alpha = parse_alpha(cfg)
    a0 = parse_input(cfg, spec, alpha)
    Ns = parse_photon_numbers(cfg)
    H = build_hamiltonian(spec, gamma)
    outs = [propagator(H, float(z)) @ a0 for z in zs]
    tables, underflow = {}, {}
    for N in Ns:
        basis = enumerate_basis(N, spec.num_modes)
        cols = ["z", "status"] + [f"p_{lab}" for lab in basis.labels]
        rows, bad = [], 0
        for z, a in zip(zs, outs):
            try:
                p = postselect(project_to_fock(a, basis)).probabilities
                rows.append([z, "ok", *p])
            except PostSelectionError:
                rows.append([z, "underflow"] + [float("nan")] * len(basis))
                bad += 1
        tables[f"postselect_N{N}.csv"] = (cols, rows)
        underflow[str(N)] = bad
    return tables, {"input_amplitudes": _complex_list(a0), "underflow_rows": underflow}


def cmd_sense(cfg):
    spec = parse_lattice(cfg)
    grid = parse_grid(cfg, "gamma")
    z_f = _number(cfg, "z", 1.5, nonneg=True)
    alpha = parse_alpha(cfg)
    a0 = parse_input(cfg, spec, alpha)
    Ns = parse_photon_numbers(cfg, [2, 4, 6])
    modes = cfg.get("modes", list(spec.lossless_modes))
    if not isinstance(modes, list) or not modes or any(
        not isinstance(m, int) or not 0 <= m < spec.num_modes for m in modes
    ):
        raise ConfigError(f"field 'modes' must list waveguide indices in [0, {spec.num_modes})")
    gc = cfg.get("critical_gamma")
    if gc is None:
        try:
            gc = critical_loss(spec)
        except PreconditionError:
            gc = None
    work = _number(cfg, "working_point", gc if gc is not None else None, nonneg=True)
    delta = _number(cfg, "delta", 1e-4, positive=True)
    setups = {"n_bar": SensingSetup(spec, a0, z_f, critical_gamma=gc)}
    for N in Ns:
        setups[f"mean_photons_neutral_N{N}"] = SensingSetup(
            spec, a0, z_f, "mean_photons_in", N, tuple(modes), gc)
    cols = ["gamma"] + list(setups)
    rows = []
    for g in grid:
        row = [g]
        for s in setups.values():
            try:
                row.append(s.evaluate(float(g)))
            except PostSelectionError:
                row.append(float("nan"))
        rows.append(row)
    slopes = {}
    for name, s in setups.items():
        sl = sensitivity_slope(s, work, delta)
        slopes[name] = {"value": _json_float(sl.value), "scheme": sl.scheme}
    extra = {"working_point": work, "delta": delta, "z_f": z_f, "modes": modes, "slopes": slopes}
    return {"sense.csv": (cols, rows)}, extra


def cmd_fock_graph(cfg):
    spec = parse_lattice(cfg)
    Ns = parse_photon_numbers(cfg, cfg.get("photon_number"))
    if len(Ns) != 1:
        raise ConfigError("fock-graph takes a single photon number")
    N = Ns[0]
    try:
        basis = enumerate_basis(N, spec.num_modes)
    except CapacityError as exc:
        n = N
        while n > 0 and math.comb(n + spec.num_modes - 1, n) > 10**6:
            n -= 1
        raise CapacityError(f"{exc}; try photon_numbers=[{n}] or fewer") from exc
    graph = export_fock_graph(build_hamiltonian(spec, 1.0), basis, coupling=spec.coupling)
    cols = ["node", "label", "loss", "degree"]
    deg = np.zeros(graph.num_nodes, dtype=int)
    for a, b in graph.edges:
        deg[a] += 1
        deg[b] += 1
    rows = [[i, lab, loss, d] for i, (lab, loss, d) in enumerate(zip(basis.labels, graph.losses, deg))]
    extra = {"num_nodes": graph.num_nodes, "num_edges": len(graph.edges), "photon_number": N}
    return {"fock-graph.csv": (cols, rows), "fock-graph.dot": graph.to_dot()}, extra


def cmd_prep_check(cfg):
    spec = parse_lattice(cfg)
    alpha = parse_alpha(cfg, default_power=1.0)
    stage_gamma = _number(cfg, "stage_gamma", 0.0, nonneg=True)
    if "distance" in cfg:
        # check an arbitrary stopping distance for a single-waveguide launch into the centre
        if stage_gamma != 0:
            raise ConfigError(f"field 'stage_gamma': the preparation stage must be lossless, got {stage_gamma}")
        critical_loss(spec)
        distance = _number(cfg, "distance", nonneg=True)
        inputs = np.zeros(spec.num_modes, dtype=complex)
        inputs[spec.num_modes // 2] = alpha
        prepared, target, residual = preparation_residual(spec, inputs, distance, alpha)
    else:
        r = prepare_em_lossless(spec, alpha, stage_gamma)
        distance, inputs, prepared, target, residual = r.distance, r.inputs, r.prepared, r.target, r.residual
    cols = ["distance", "residual"] + [
        f"{name}_{m}_{p}" for name in ("input", "prepared", "target")
        for m in range(spec.num_modes) for p in ("re", "im")]
    row = [distance, residual] + [x for v in (inputs, prepared, target) for c in v for x in (c.real, c.imag)]
    extra = {"distance": _json_float(distance), "residual": _json_float(residual),
             "passed": bool(residual < 1e-8 * max(1.0, abs(alpha)))}
    return {"prep-check.csv": (cols, [row])}, extra


HANDLERS = {
    "spectrum": cmd_spectrum,
    "evolve": cmd_evolve,
    "postselect": cmd_postselect,
    "sense": cmd_sense,
    "fock-graph": cmd_fock_graph,
    "prep-check": cmd_prep_check,
}


# --------------------------------------------------------------------------- output


def _write_csv(path: Path, cols, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            if len(row) != len(cols):
                raise RuntimeError(f"row has {len(row)} values for {len(cols)} columns")
            w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])


def run(command: str, cfg: dict, out: Path, overrides=()) -> dict:
    """Run ``command`` on a parsed config and write its files into ``out``."""
    files, extra = HANDLERS[command](cfg)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, payload in files.items():
        path = out / name
        if isinstance(payload, str):
            path.write_text(payload)
        else:
            _write_csv(path, *payload)
        written.append(name)
    meta = {
        "command": command,
        "config": cfg,
        "overrides": list(overrides),
        "version": __version__,
        "convention": CONVENTION,
        "files": written,
        **extra,
    }
    meta_text = json.dumps(meta, indent=2, sort_keys=True, allow_nan=False) + "\n"
    (out / f"{command}.meta.json").write_text(meta_text)
    return meta


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="epsim", description="Lossy waveguide lattice simulator")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                   help="set a (dotted) config field; may be repeated")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = apply_overrides(load_config(args.config), args.override)
        run(args.command, cfg, Path(args.out), args.override)
    except OSError as exc:
        print(f"epsim: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapacityError as exc:
        print(f"epsim: capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except NumericError as exc:
        print(f"epsim: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (EpsimError, ValueError) as exc:
        print(f"epsim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
