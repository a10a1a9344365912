"""Spectral sweeps, branch tracking and exceptional-point location.

Coalescing groups are handled through the centred power sum
``p2 = sum_i (λ_i - mean)^2`` of the group eigenvalues. Individual eigenvalues
near a high-order exceptional point carry round-off errors of order
``eps**(1/order)``, but symmetric functions of a well separated group are as
accurate as the matrix entries, and ``p2`` vanishes linearly in ``Γ - Γ_c`` at
the square-root branch points met in passive lattices and their N-photon lifts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import schur
from scipy.optimize import linear_sum_assignment, minimize_scalar

from .errors import ValidationError
from .lattice import DEFECTIVE_CONDITION, eigendecompose

Builder = Callable[[float], np.ndarray]


@dataclass(frozen=True)
class SpectralSweep:
    """Eigenvalue branches on a loss-rate grid.

    ``branches[i, k]`` is branch ``k`` at ``gamma_grid[i]``; consecutive rows are
    matched by optimal assignment so each column is a continuous branch.
    """

    gamma_grid: np.ndarray
    branches: np.ndarray
    defective: np.ndarray
    builder: Builder = field(repr=False, compare=False)

    @property
    def num_branches(self) -> int:
        return self.branches.shape[1]


@dataclass(frozen=True)
class EPRecord:
    """A located exceptional point.

    ``order_estimate`` is the longest Jordan chain in the coalescing group, i.e. the
    number of eigenvectors that merge into one. A group can hold several chains
    when sums of single-photon eigenvalues coincide by symmetry. ``scaling_exponent`` is the fitted
    power law of the group splitting in ``Γ - Γ_c``; for a generic order-p point it
    is ``1/p`` but for lifted N-photon points it stays at 1/2.
    """

    gamma_c: float
    eigenvalue: complex
    coalescing_branch_ids: tuple[int, ...]
    group_size: int
    jordan_blocks: tuple[int, ...]
    order_estimate: int
    scaling_exponent: float
    eigenvector_overlap: float
    classified: bool

    @property
    def geometric_multiplicity(self) -> int:
        return len(self.jordan_blocks)

    @property
    def scaling_order(self) -> int:
        """Order implied by the splitting law, ``round(1/exponent)``."""
        return int(round(1 / self.scaling_exponent))


def _match(prev, prev2, new):
    pred = prev if prev2 is None else 2 * prev - prev2
    cost = np.abs(prev[:, None] - new[None, :]) + 1e-6 * np.abs(pred[:, None] - new[None, :])
    rows, cols = linear_sum_assignment(cost)
    return new[cols[np.argsort(rows)]]


def sweep(builder: Builder, gamma_min: float, gamma_max: float, steps: int,
          cond_threshold: float = DEFECTIVE_CONDITION) -> SpectralSweep:
    if not gamma_min < gamma_max:
        raise ValidationError(f"need gamma_min < gamma_max, got {gamma_min}, {gamma_max}")
    if steps < 2:
        raise ValidationError(f"need at least 2 grid points, got {steps}")
    grid = np.linspace(gamma_min, gamma_max, int(steps))
    rows, flags = [], []
    for g in grid:
        es = eigendecompose(builder(float(g)), cond_threshold)
        flags.append(es.defective)
        if not rows:
            rows.append(es.values)
        else:
            rows.append(_match(rows[-1], rows[-2] if len(rows) > 1 else None, es.values))
    return SpectralSweep(grid, np.array(rows), np.array(flags), builder)


def coupling_scale(H) -> float:
    """Smallest non-zero off-diagonal magnitude; the natural unit of a lattice."""
    H = np.asarray(H)
    off = np.abs(H[~np.eye(H.shape[0], dtype=bool)])
    off = off[off > 1e-14 * max(1.0, off.max(initial=0.0))]
    return float(off.min()) if off.size else 1.0


def _nearest_group(w, center, k, iters=3):
    for _ in range(iters):
        idx = np.argsort(np.abs(w - center), kind="stable")[:k]
        center = w[idx].mean()
    return idx, center


def _linked_group(w, center, link):
    members = {int(np.argmin(np.abs(w - center)))}
    frontier = list(members)
    while frontier:
        i = frontier.pop()
        for j in np.flatnonzero(np.abs(w - w[i]) < link):
            if int(j) not in members:
                members.add(int(j))
                frontier.append(int(j))
    return np.array(sorted(members))


def _p2(vals):
    mu = vals - vals.mean()
    return complex(np.sum(mu**2))


def group_spread(vals, matrix_norm: float = 1.0) -> float:
    """Size of a group of eigenvalues that is robust against round-off at coalescence.

    Returns ``max_j |e_j|**(1/j)`` over the elementary symmetric functions ``e_j``
    of the centred group. Symmetric functions of a separated group are as accurate
    as the matrix entries; terms below their round-off floor
    ``eps * C(k, j) * matrix_norm**j`` are ignored.
    """
    vals = np.asarray(vals, dtype=complex)
    k = len(vals)
    if k < 2:
        return 0.0
    coeffs = np.poly(vals - vals.mean())
    best = 0.0
    for j in range(2, k + 1):
        floor = 1e3 * np.finfo(float).eps * math.comb(k, j) * max(1.0, matrix_norm) ** j
        if abs(coeffs[j]) > floor:
            best = max(best, abs(coeffs[j]) ** (1 / j))
    return best


def jordan_blocks(H, center: complex, k: int, rtol: float = 1e-8) -> tuple[int, ...]:
    """Jordan block sizes of the ``k`` eigenvalues of ``H`` nearest ``center``.

    The group is split off by a reordered Schur form; block sizes follow from the
    numerical ranks of powers of the shifted ``k x k`` triangular block.
    """
    H = np.asarray(H, dtype=complex)
    w = np.linalg.eigvals(H)
    d = np.sort(np.abs(w - center))
    radius = 0.5 * (d[k - 1] + d[k]) if k < len(d) else np.inf
    T, _, sdim = schur(H, output="complex", sort=lambda x: abs(x - center) < radius)
    if sdim != k:
        raise ValidationError(f"could not isolate a group of {k} eigenvalues")
    T11 = T[:k, :k]
    Nil = T11 - np.mean(np.diag(T11)) * np.eye(k)
    # a diagonalisable group leaves Nil at round-off level; measure it against H
    norm = max(np.linalg.norm(Nil, 2), 1e-4 * np.linalg.norm(H, 2), 1e-300)
    ranks = [k]
    P = np.eye(k, dtype=complex)
    for j in range(1, k + 1):
        P = P @ Nil
        sv = np.linalg.svd(P, compute_uv=False)
        ranks.append(min(ranks[-1], int(np.sum(sv > rtol * norm**j))))
        if ranks[-1] == 0:
            break
    ranks += [0] * (k + 2 - len(ranks))
    at_least = [ranks[j - 1] - ranks[j] for j in range(1, k + 2)]
    blocks = []
    for size in range(1, k + 1):
        blocks += [size] * (at_least[size - 1] - at_least[size])
    return tuple(sorted(blocks, reverse=True))


def _refine(p2_of, a, b, tol):
    fa, fb = p2_of(a), p2_of(b)
    d = fb - fa
    sa, sb = (fa * d.conjugate()).real, (fb * d.conjugate()).real
    if sa * sb < 0:
        while b - a > tol:
            m = 0.5 * (a + b)
            sm = (p2_of(m) * d.conjugate()).real
            if sm == 0:
                return m
            if (sm < 0) == (sa < 0):
                a, sa = m, sm
            else:
                b = m
        return 0.5 * (a + b)
    res = minimize_scalar(lambda g: abs(p2_of(g)), bounds=(a, b), method="bounded",
                          options={"xatol": tol})
    return float(res.x)


def _candidates(sw: SpectralSweep, scale, gap_threshold, reach=3):
    """Grid dips of pairwise branch gaps, smallest first.

    A dip must be a local minimum that sits well below the gap ``reach`` points
    away; pairs that stay degenerate by symmetry over a whole stretch are skipped.
    """
    B = sw.branches
    G, K = B.shape
    a, b = np.triu_indices(K, 1)
    gap = np.abs(B[:, a] - B[:, b])  # (G, pairs)
    pad = np.pad(gap, ((1, 1), (0, 0)), constant_values=np.inf)
    local_min = (gap <= pad[:-2]) & (gap <= pad[2:])
    rows = np.arange(G)
    around = np.maximum(gap[np.clip(rows - reach, 0, G - 1)], gap[np.clip(rows + reach, 0, G - 1)])
    dip = local_min & (gap <= 0.5 * around) & (around > 1e-8 * scale)
    # a monotone approach to an end of the grid counts as a dip there too
    dip |= local_min & (gap < gap_threshold * scale) & (around > 1e-8 * scale)
    i, p = np.nonzero(dip)
    order = np.argsort(gap[i, p], kind="stable")
    return [(int(i[o]), int(a[p[o]]), int(b[p[o]])) for o in order]


def find_eps(sw: SpectralSweep, refinement_tol: float = 1e-10, gap_threshold: float = 1e-3,
             eps_window: tuple[float, float] = (1e-6, 1e-3), fit_points: int = 8,
             min_overlap: float = 0.999) -> list[EPRecord]:
    """Locate and classify exceptional points along a sweep.

    Grid-level dips of pairwise branch gaps are bracketed and refined by bisection
    on the signed squared gap of the coalescing group to ``refinement_tol``. A
    point is kept when the group collapses (spread below ``gap_threshold`` times
    the coupling scale), its eigenvectors coalesce (overlap >= ``min_overlap``)
    and it carries a Jordan block longer than one. The splitting exponent is
    fitted over ``Γ_c + ε`` with ``ε`` in ``eps_window`` times the coupling scale.
    """
    grid, B, builder = sw.gamma_grid, sw.branches, sw.builder
    scale = coupling_scale(builder(float(grid[0])))
    link = 0.2 * scale
    cache = {}

    def eigs(g):
        g = float(g)
        if g not in cache:
            cache[g] = np.linalg.eigvals(builder(g))
        return cache[g]

    records, covered = [], []
    for i, a, b in _candidates(sw, scale, gap_threshold):
        mid = 0.5 * (B[i, a] + B[i, b])
        if any(abs(i - j) <= 2 and abs(mid - c) <= r for j, c, r in covered):
            continue
        lo, hi = max(i - 1, 0), min(i + 1, len(grid) - 1)
        ga, gb = float(grid[lo]), float(grid[hi])
        ma = 0.5 * (B[lo, a] + B[lo, b])
        mb = 0.5 * (B[hi, a] + B[hi, b])

        def pair_center(g, ga=ga, gb=gb, ma=ma, mb=mb):
            return ma + (mb - ma) * ((g - ga) / (gb - ga) if gb > ga else 0.0)

        def seed_p2(g):
            w = eigs(g)
            idx, _ = _nearest_group(w, pair_center(g), 2, iters=1)
            return _p2(w[idx])

        g_seed = _refine(seed_p2, ga, gb, max(refinement_tol, 1e-13))
        w = eigs(g_seed)
        seed_center = _nearest_group(w, pair_center(g_seed), 2, iters=1)[1]
        members = _linked_group(w, seed_center, link)
        k = len(members)
        c_seed = w[members].mean()
        ca = _nearest_group(eigs(ga), c_seed, k)[1]
        cb = _nearest_group(eigs(gb), c_seed, k)[1]

        def group_p2(g, ga=ga, gb=gb, ca=ca, cb=cb, k=k):
            t = (g - ga) / (gb - ga) if gb > ga else 0.0
            w = eigs(g)
            idx, _ = _nearest_group(w, ca + t * (cb - ca), k)
            return _p2(w[idx])

        gamma_c = _refine(group_p2, ga, gb, refinement_tol) if k > 1 else g_seed
        row = B[i]
        idx, c_grid = _nearest_group(row, c_seed, k)
        covered.append((i, c_grid, max(np.max(np.abs(row[idx] - c_grid)), abs(B[i, a] - B[i, b]) / 2) + 1e-12))
        rec = _characterize(builder, gamma_c, c_seed, k, sw, scale, gap_threshold,
                            eps_window, fit_points, min_overlap)
        if rec is not None:
            records.append(rec)

    unique = []
    for r in sorted(records, key=lambda r: (r.gamma_c, r.eigenvalue.real, r.eigenvalue.imag)):
        if any(abs(r.gamma_c - u.gamma_c) <= max(1e-6, 100 * refinement_tol) * (1 + abs(u.gamma_c))
               and abs(r.eigenvalue - u.eigenvalue) < link for u in unique):
            continue
        unique.append(r)
    return unique


def _characterize(builder, gamma_c, center, k, sw, scale, gap_threshold, eps_window,
                  fit_points, min_overlap):
    if k < 2:
        return None
    H = builder(gamma_c)
    hnorm = np.linalg.norm(H, 2)
    w, V = np.linalg.eig(H)
    idx, c = _nearest_group(w, center, k)
    if group_spread(w[idx], hnorm) > gap_threshold * scale:
        return None
    Vg = V[:, idx] / np.linalg.norm(V[:, idx], axis=0)
    ov = np.abs(Vg.conj().T @ Vg)
    np.fill_diagonal(ov, 0)
    overlap = float(min(ov.max(), 1.0))
    if overlap < min_overlap:
        return None
    blocks = jordan_blocks(H, c, k)
    if blocks[0] < 2:
        return None

    eps = np.logspace(np.log10(eps_window[0]), np.log10(eps_window[1]), fit_points) * scale
    spreads = []
    for e in eps:
        He = builder(gamma_c + e)
        we = np.linalg.eigvals(He)
        ie, _ = _nearest_group(we, c, k)
        spreads.append(group_spread(we[ie], hnorm))
    exponent = float(np.polyfit(np.log(eps), np.log(spreads), 1)[0])
    classified = any(abs(exponent - 1 / p) <= 0.02 for p in range(2, 11))

    i0 = int(np.argmin(np.abs(sw.gamma_grid - gamma_c)))
    ids, _ = _nearest_group(sw.branches[i0], c, k)
    return EPRecord(
        gamma_c=float(gamma_c),
        eigenvalue=complex(c),
        coalescing_branch_ids=tuple(sorted(int(j) for j in ids)),
        group_size=k,
        jordan_blocks=blocks,
        order_estimate=blocks[0],
        scaling_exponent=exponent,
        eigenvector_overlap=overlap,
        classified=classified,
    )


def locate_eps(builder: Builder, gamma_min: float, gamma_max: float, steps: int = 401,
               **kwargs) -> list[EPRecord]:
    """Convenience wrapper: sweep then :func:`find_eps`."""
    return find_eps(sweep(builder, gamma_min, gamma_max, steps), **kwargs)


def multifurcation_points(H, link: float | None = None) -> list[tuple[complex, int]]:
    """Cluster the spectrum of ``H`` into distinct points ``(centre, multiplicity)``.

    Applied at a critical loss rate this counts the multifurcation points and the
    number of branches meeting at each. ``link`` defaults to a fifth of the
    coupling scale.
    """
    H = np.asarray(H)
    link = 0.2 * coupling_scale(H) if link is None else link
    w = np.linalg.eigvals(H)
    left = set(range(len(w)))
    points = []
    while left:
        start = min(left)
        members = _linked_group(w[sorted(left)], w[start], link)
        chosen = [sorted(left)[j] for j in members]
        left -= set(chosen)
        points.append((complex(w[chosen].mean()), len(chosen)))
    points.sort(key=lambda p: (round(p[0].real, 8), round(p[0].imag, 8)))
    return points


def ep_splitting(coupling: float, eps: float) -> complex:
    """``λ+ - λ-`` of the semi-lossy coupler at ``Γ = 2κ + ε`` (exact two-level result)."""
    if not eps > 0:
        raise ValidationError("eps must be positive")
    gamma = 2 * coupling + eps
    return 2 * np.sqrt(complex(coupling**2 - gamma**2 / 4))


def count_multifurcation_points(N: int, M: int) -> int:
    """Distinct multifurcation points of the N-photon spectrum, ``C(N+M-2, N)``."""
    if N < 1 or M < 2:
        raise ValidationError("need N >= 1 and M >= 2")
    return math.comb(N + M - 2, N)


def count_points_with_branching(N: int, N_E: int, M: int) -> tuple[int, int]:
    """Points where ``N_E + 1`` branches meet: ``(C(N-N_E+M-3, N-N_E), N_E+1)``.

    With two modes every photon sits in the coalescing pair, so the only point is
    the order-(N+1) one at ``N_E = N``.
    """
    if not 0 <= N_E <= N:
        raise ValidationError("need 0 <= N_E <= N")
    if M < 2:
        raise ValidationError("need M >= 2")
    if M == 2:
        return (1 if N_E == N else 0), N_E + 1
    return math.comb(N - N_E + M - 3, N - N_E), N_E + 1
