"""Accumulated spectrograms and their consistency diagnostics.

The restriction of a projection kernel to a window has eigenpairs
(mu_j, Phi_j); pushing each eigenfunction back through the kernel gives
the quadrature image

    (K P Phi_j)(x) = sum_i K(x, x_i) Phi_j(x_i) w_i,

whose L2 normalization is the polar-decomposition function Psi_j. The
accumulated spectrogram rho is the sum of |Psi_j|^2 over the first N
modes, N being the upper integer part of the trace. This module builds
those fields on an evaluation grid, together with the defect field G,
the near-1 eigenvalue counts, and the inequality suite that certifies a
run is resolved enough to trust.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .discretize import (QuadratureGrid, ResourceLimitError, SpectralData,
                         assemble_operator, build_grid, max_n_per_axis,
                         spectral_decompose)
from .geometry import Box, Region
from .kernels import Kernel

DEFAULT_MU_FLOOR = 1e-12
DEFAULT_EVAL_NODE_CAP = 400_000
_CHUNK = 4096
_COUNT_TIE_TOL = 1e-9


class RankDeficiencyError(ValueError):
    """More Psi modes were requested than the spectrum supports."""


def count_n(trace: float) -> int:
    """Smallest integer strictly greater than trace - 1e-9.

    The tolerance makes an exactly integral trace map to itself, which
    is the ceiling reading of the definition; ties shift the count by at
    most one and are absorbed by the 1/N normalization downstream.
    """
    if trace < 0:
        raise ValueError(f"trace must be nonnegative, got {trace}")
    return int(math.floor(trace - _COUNT_TIE_TOL)) + 1


def c_delta(delta: float) -> float:
    """Spectral-count constant max(1/delta, 1/(1-delta))."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return max(1.0 / delta, 1.0 / (1.0 - delta))


def count_n_delta(spectral: SpectralData, delta: float) -> int:
    """Number of (clamped) eigenvalues above 1 - delta."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return spectral.count_above(1.0 - delta)


# ---------------------------------------------------------------------------
# evaluation grids


@dataclass(eq=False)
class EvalGrid:
    """Quadrature grid over an evaluation box E containing the window."""

    grid: QuadratureGrid
    base_region: Region
    margin: float

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def weights(self) -> np.ndarray:
        return self.grid.weights

    def inside_base(self) -> np.ndarray:
        return self.base_region.contains_points(self.grid.nodes)


def build_eval_grid(kernel: Kernel, region: Region,
                    margin: float | None = None,
                    spacing: float | None = None,
                    reference_grid: QuadratureGrid | None = None,
                    node_cap: int = DEFAULT_EVAL_NODE_CAP) -> EvalGrid:
    """Uniform grid on the bounding box of ``region`` inflated by ``margin``.

    The default margin is four correlation lengths of the kernel; the
    default spacing matches ``reference_grid`` when given.
    """
    if margin is None:
        margin = 4.0 * kernel.correlation_length()
    if margin <= 0:
        raise ValueError("evaluation margin must be positive")
    if spacing is None:
        if reference_grid is not None:
            spacing = float(reference_grid.spacing.min())
        else:
            spacing = kernel.correlation_length() / 8.0
    bbox = region.bounding_box()
    lo = bbox.lower - margin
    hi = bbox.upper + margin
    ns = [max(2, int(np.ceil((hi[k] - lo[k]) / spacing))) for k in range(bbox.dim)]
    if int(np.prod(ns, dtype=np.int64)) > node_cap:
        raise ValueError(
            f"evaluation grid would need {int(np.prod(ns, dtype=np.int64))} nodes, "
            f"cap is {node_cap}"
        )
    axes = [lo[k] + (hi[k] - lo[k]) / ns[k] * (np.arange(ns[k]) + 0.5)
            for k in range(bbox.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.column_stack([m.ravel() for m in mesh])
    cell = float(np.prod([(hi[k] - lo[k]) / ns[k] for k in range(bbox.dim)]))
    weights = np.full(nodes.shape[0], cell)
    quad = QuadratureGrid(region=Box(lo, hi), nodes=nodes, weights=weights,
                          spacing=np.array([(hi[k] - lo[k]) / ns[k]
                                            for k in range(bbox.dim)]))
    return EvalGrid(grid=quad, base_region=region, margin=float(margin))


# ---------------------------------------------------------------------------
# Psi functions and the accumulated spectrogram


@dataclass(eq=False)
class PsiSet:
    """Normalized mode images on the evaluation grid.

    ``values[:, j]`` is the image (K P Phi_j) scaled to unit discrete L2
    norm over E. ``raw_norms_sq[j]`` is the pre-normalization squared
    norm; in exact arithmetic over the whole space it equals mu_j, so
    its deviation from ``eigenvalues[j]`` measures window truncation
    plus discretization error.
    """

    values: np.ndarray
    raw_norms_sq: np.ndarray
    eigenvalues: np.ndarray
    dropped_trace: float
    eval_grid: EvalGrid

    @property
    def n_modes(self) -> int:
        return self.values.shape[1]

    def norm_ratios(self) -> np.ndarray:
        """raw_norms_sq / mu, the per-mode mass captured by E."""
        return self.raw_norms_sq / self.eigenvalues


def compute_psi(kernel: Kernel, spectral: SpectralData, eval_grid: EvalGrid,
                j_max: int | None = None,
                mu_floor: float = DEFAULT_MU_FLOOR) -> PsiSet:
    """Quadrature images of the leading eigenfunctions, unit-normalized on E."""
    mu = spectral.eigenvalues_clamped
    n_above = int(np.sum(mu > mu_floor))
    if j_max is None:
        j_max = n_above
    if j_max > n_above:
        raise RankDeficiencyError(
            f"mode j={n_above + 1} has eigenvalue <= mu_floor ({mu_floor:g}); "
            f"cannot supply {j_max} modes"
        )
    if j_max < 1:
        raise RankDeficiencyError("at least one mode is required")

    lam = spectral.grid
    scaled_vecs = np.sqrt(lam.weights)[:, None] * spectral.vectors[:, :j_max]
    pts = eval_grid.nodes
    w_e = eval_grid.weights
    chunks = []
    for start in range(0, pts.shape[0], _CHUNK):
        block = kernel.eval_matrix(pts[start:start + _CHUNK], lam.nodes)
        chunks.append(block @ scaled_vecs)
    raw = np.concatenate(chunks, axis=0)
    norms_sq = np.real(np.sum(np.abs(raw) ** 2 * w_e[:, None], axis=0))
    if np.any(norms_sq <= 0):
        raise RankDeficiencyError("a mode image vanished on the evaluation grid")
    values = raw / np.sqrt(norms_sq)[None, :]
    dropped = float(max(spectral.trace - float(spectral.eigenvalues[:j_max].sum()), 0.0))
    return PsiSet(values=values, raw_norms_sq=norms_sq,
                  eigenvalues=mu[:j_max].copy(), dropped_trace=dropped,
                  eval_grid=eval_grid)


@dataclass(eq=False)
class SpectrogramField:
    """Accumulated spectrogram values with exact mass accounting."""

    eval_grid: EvalGrid
    rho: np.ndarray
    psi_norms_sq: np.ndarray
    n_count: int
    trace: float
    tail_mass: float

    def integral(self) -> float:
        return float(np.sum(self.rho * self.eval_grid.weights))


def accumulated_spectrogram(kernel: Kernel, spectral: SpectralData,
                            eval_grid: EvalGrid,
                            mu_floor: float = DEFAULT_MU_FLOOR,
                            psi: PsiSet | None = None) -> SpectrogramField:
    """Sum of |Psi_j|^2 over the first N modes, N = upper integer trace.

    Each Psi_j carries unit discrete norm on E, so the integral of rho
    over E equals N up to rounding; tail_mass records the (tiny)
    difference so that mass conservation is explicit in the output.
    """
    n_count = count_n(spectral.trace)
    if psi is None:
        psi = compute_psi(kernel, spectral, eval_grid, j_max=n_count,
                          mu_floor=mu_floor)
    elif psi.n_modes < n_count:
        raise RankDeficiencyError(
            f"psi set holds {psi.n_modes} modes but N = {n_count}"
        )
    rho = np.sum(np.abs(psi.values[:, :n_count]) ** 2, axis=1)
    integral = float(np.sum(rho * eval_grid.weights))
    return SpectrogramField(eval_grid=eval_grid, rho=rho,
                            psi_norms_sq=psi.raw_norms_sq[:n_count].copy(),
                            n_count=n_count, trace=spectral.trace,
                            tail_mass=n_count - integral)


def inner_product_spectral(psi: PsiSet, x_index: int | None = None):
    """The mu-weighted mode sum sum_j mu_j |Psi_j(x)|^2.

    For the true unit-norm Psi_j the weight mu_j exactly cancels their
    1/sqrt(mu_j) normalization, so the sum is evaluated from the raw
    mode images; this stays stable arbitrarily deep into the spectrum
    and is unaffected by window truncation of the norms. The neglected
    modes below the floor contribute at most ``psi.dropped_trace`` in
    integral, which is returned alongside.
    """
    weighted = np.sum(np.abs(psi.values) ** 2 * psi.raw_norms_sq[None, :], axis=1)
    if x_index is not None:
        return float(weighted[x_index]), psi.dropped_trace
    return weighted, psi.dropped_trace


def inner_product_direct(kernel: Kernel, lambda_grid: QuadratureGrid,
                         points: np.ndarray) -> np.ndarray:
    """Window integral of |K(x, .)|^2 by quadrature on the window grid."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if lambda_grid.n_nodes == 0:
        return np.zeros(points.shape[0])
    out = np.empty(points.shape[0])
    for start in range(0, points.shape[0], _CHUNK):
        block = kernel.eval_matrix(points[start:start + _CHUNK], lambda_grid.nodes)
        out[start:start + _CHUNK] = np.abs(block) ** 2 @ lambda_grid.weights
    return out


@dataclass(eq=False)
class DefectField:
    """G(x) = K(x,x) 1_Lambda(x) - int_Lambda |K(x,y)|^2 dy on the eval grid.

    ``quad_error_estimate`` is the mass of evaluation cells straddling
    the window boundary times the diagonal: |G| jumps there, so each
    straddling cell may misattribute up to its whole weight.
    """

    values: np.ndarray
    l1_on_window: float
    l1_tail_bound: float
    inside: np.ndarray
    quad_error_estimate: float

    @property
    def l1_total(self) -> float:
        return self.l1_on_window + self.l1_tail_bound


def defect_g(kernel: Kernel, lambda_grid: QuadratureGrid,
             eval_grid: EvalGrid) -> DefectField:
    """Defect between the diagonal on the window and the window integral.

    The L1 norm over all space splits into the part computed on E plus
    the mass of the direct integral lying beyond E, which is known
    exactly from the trace identity (the integral of G off E is the
    off-E mass of the window integral, up to sign).
    """
    ipd = inner_product_direct(kernel, lambda_grid, eval_grid.nodes)
    inside = eval_grid.inside_base()
    g = kernel.diagonal_value * inside - ipd
    l1 = float(np.sum(np.abs(g) * eval_grid.weights))
    e_count = kernel.diagonal_value * float(lambda_grid.weights.sum())
    tail = max(e_count - float(np.sum(ipd * eval_grid.weights)), 0.0)
    half_diag = 0.5 * float(np.linalg.norm(eval_grid.grid.spacing))
    straddle = eval_grid.base_region.boundary_distance(eval_grid.nodes) < half_diag
    quad_est = kernel.diagonal_value * float(
        np.sum(eval_grid.weights[straddle]))
    return DefectField(values=g, l1_on_window=l1, l1_tail_bound=tail,
                       inside=inside, quad_error_estimate=quad_est)


# ---------------------------------------------------------------------------
# inequality diagnostics


@dataclass(frozen=True)
class InequalityCheck:
    name: str
    lhs: float
    rhs: float
    slack: float

    @property
    def passed(self) -> bool:
        return self.lhs <= self.rhs + self.slack


@dataclass(eq=False)
class DiagnosticsReport:
    delta: float
    c_delta: float
    n_delta: int
    n_count: int
    e_count: float
    variance: float
    g_l1: float
    checks: tuple

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)


def inequality_report(kernel: Kernel, spectral: SpectralData,
                      spectrogram: SpectrogramField, psi: PsiSet,
                      defect: DefectField, delta: float) -> DiagnosticsReport:
    """Evaluate the four spectral-count inequalities on one configuration.

    All four hold exactly for the continuum operator; failures indicate
    an under-resolved grid, so the slack is one millionth of each right
    hand side plus the grid's volume-defect share.
    """
    cdel = c_delta(delta)
    mu = spectral.eigenvalues_clamped
    e_count = spectral.trace
    variance = float(np.sum(mu * (1.0 - mu)))
    n_delta = count_n_delta(spectral, delta)
    quad_slack = kernel.diagonal_value * spectral.grid.volume_defect + 1e-12

    ips, _ = inner_product_spectral(psi)
    w_e = spectrogram.eval_grid.weights
    lhs_a = float(np.sum(np.abs(spectrogram.rho - ips) * w_e))
    lhs_a += abs(spectrogram.tail_mass)
    lhs_a += max(e_count - float(np.sum(ips * w_e)), 0.0)
    rhs_a = 1.0 + 2.0 * delta * e_count + 2.0 * (1.0 - delta) * cdel * variance

    checks = (
        InequalityCheck("psi_approximation", lhs_a, rhs_a,
                        1e-6 * rhs_a + quad_slack),
        InequalityCheck("delta_count", abs(n_delta - e_count),
                        cdel * variance, 1e-6 * cdel * variance + quad_slack),
        # for projection kernels this bound is attained with equality, so
        # the boundary-cell quadrature estimate must enter the slack
        InequalityCheck("defect_l1", defect.l1_total, 2.0 * variance,
                        2e-6 * variance + quad_slack
                        + defect.quad_error_estimate),
        InequalityCheck("variance_vs_mean", variance, e_count,
                        1e-6 * e_count + quad_slack),
    )
    return DiagnosticsReport(delta=delta, c_delta=cdel, n_delta=n_delta,
                             n_count=spectrogram.n_count, e_count=e_count,
                             variance=variance, g_l1=defect.l1_total,
                             checks=checks)


# ---------------------------------------------------------------------------
# dilation convergence study


@dataclass(frozen=True)
class ResolutionPolicy:
    """How grids scale along a dilation ladder.

    The window grid aims at ``nodes_per_unit`` cells per unit length per
    axis until the node cap forces coarsening (reported per row).
    """

    nodes_per_unit: float = 40.0
    margin: float | None = None
    eval_spacing: float | None = None
    node_cap: int = 4096
    eval_node_cap: int = DEFAULT_EVAL_NODE_CAP


@dataclass(frozen=True)
class ConvergenceRow:
    scale: float
    n_per_axis: int
    n_count: int
    trace: float
    err_raw: float
    err_normalized: float
    tail_mass: float
    saturated: bool
    trace_defect: float


def dilation_snapshot(kernel: Kernel, base_region: Region, scale: float,
                      policy: ResolutionPolicy = ResolutionPolicy(),
                      n_per_axis: int | None = None):
    """One rung of the dilation ladder: discretize, decompose, compare.

    Returns (ConvergenceRow, SpectrogramField). ``n_per_axis`` overrides
    the policy's per-unit scaling with a fixed grid resolution.
    """
    region = base_region.dilate(float(scale))
    bbox = region.bounding_box()
    side = float((bbox.upper - bbox.lower).max())
    if n_per_axis is None:
        n_target = max(2, int(np.ceil(policy.nodes_per_unit * side)))
    else:
        n_target = n_per_axis
    try:
        grid = build_grid(region, n_target, node_cap=policy.node_cap)
        n_axis, saturated = n_target, False
    except ResourceLimitError:
        n_axis, saturated = max_n_per_axis(region, policy.node_cap), True
        grid = build_grid(region, n_axis, node_cap=policy.node_cap)
    operator = assemble_operator(kernel, grid)
    spectral = spectral_decompose(operator)
    eval_grid = build_eval_grid(kernel, region, margin=policy.margin,
                                spacing=policy.eval_spacing,
                                reference_grid=grid,
                                node_cap=policy.eval_node_cap)
    fld = accumulated_spectrogram(kernel, spectral, eval_grid)
    target = kernel.diagonal_value * eval_grid.inside_base()
    err_raw = float(np.sum(np.abs(fld.rho - target) * eval_grid.weights))
    err_raw += abs(fld.tail_mass)
    row = ConvergenceRow(scale=float(scale), n_per_axis=n_axis,
                         n_count=fld.n_count, trace=fld.trace,
                         err_raw=err_raw, err_normalized=err_raw / fld.n_count,
                         tail_mass=fld.tail_mass, saturated=saturated,
                         trace_defect=abs(spectral.trace - operator.trace))
    return row, fld


def l1_convergence_study(kernel: Kernel, base_region: Region, scales,
                         policy: ResolutionPolicy = ResolutionPolicy()):
    """L1 distance of rho from its limit shape along dilations of a region.

    err_raw integrates |rho - K(x,x) 1_window| over E and adds the mass
    accounting remainder; err_normalized divides by the mode count N,
    which is the normalization under which the distance tends to zero.
    """
    scales = [float(s) for s in scales]
    if any(b <= a for a, b in zip(scales, scales[1:])):
        raise ValueError("scales must be strictly ascending")
    return [dilation_snapshot(kernel, base_region, s, policy)[0]
            for s in scales]
