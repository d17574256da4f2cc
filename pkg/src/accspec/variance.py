"""Number-count expectation and variance by independent routes.

For a projection kernel the count variance in a window equals
Tr(M - M^2); on the spectral route that is sum mu_j (1 - mu_j) over the
discretized eigenvalues. For radial kernels on balls the same quantity
reduces to a one-dimensional integral of the radial profile against the
ball-intersection lens volume, which scales to arbitrarily large radii
where dense eigensolvers cannot follow. Agreement of the two routes is
the package's main cross-validation; the log-asymptotic fit of the
band-limited family's variance is its quantitative benchmark.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .discretize import (DegenerateGridError, ResourceLimitError, SpectralData,
                         assemble_operator, build_grid, max_n_per_axis,
                         spectral_decompose)
from .geometry import (Ball, DisjointBallUnion, Region,
                       _ball_volume_unchecked, lens_volume_exact_many,
                       unit_ball_volume, unit_sphere_area)
from .kernels import Kernel
from .quadrature import panel_nodes


class FitRangeError(ValueError):
    """The supplied radii do not span enough range for an asymptotic fit."""


def expected_count(kernel: Kernel, region: Region) -> float:
    """E = diagonal * volume; exact for constant-diagonal kernels."""
    if kernel.ambient_dim != region.dim:
        raise ValueError(
            f"kernel acts on R^{kernel.ambient_dim} but region lives in R^{region.dim}"
        )
    return kernel.diagonal_value * region.volume()


def variance_spectral(spectral: SpectralData) -> float:
    """sum mu_j (1 - mu_j) over clamped eigenvalues; nonnegative."""
    mu = spectral.eigenvalues_clamped
    return float(np.sum(mu * (1.0 - mu)))


@dataclass(frozen=True)
class RadialVariance:
    """Radial-route variance with its quadrature + tail error budget."""

    value: float
    error_estimate: float
    r_max: float

    @property
    def accuracy_warning(self) -> bool:
        return self.error_estimate > 0.01 * max(self.value, 1e-300)


def variance_radial(kernel: Kernel, radius: float,
                    r_max: float | None = None) -> RadialVariance:
    """Count variance in B(0, radius) from the radial profile.

    Integrates phi(r) against the lens volume on [0, 2 radius] and
    against the full ball volume beyond, on panels sized to the
    profile's oscillation. The profile tail past r_max enters the error
    estimate through the kernel's envelope bound, never silently.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    d = kernel.ambient_dim
    if r_max is None:
        r_max = kernel.default_r_max()
    sigma = unit_sphere_area(d)
    ball = unit_ball_volume(d) * radius ** d

    def lens_weighted(nodes):
        return (nodes ** (d - 1) * kernel.radial_profile(nodes)
                * lens_volume_exact_many(d, nodes, radius))

    def profile_weighted(nodes):
        return nodes ** (d - 1) * kernel.radial_profile(nodes)

    def both_resolutions(f, edges):
        fine_n, fine_w = panel_nodes(edges, 64)
        coarse_n, coarse_w = panel_nodes(edges, 32)
        fine = float(np.sum(fine_w * f(fine_n)))
        coarse = float(np.sum(coarse_w * f(coarse_n)))
        return fine, abs(fine - coarse)

    main, err_main = both_resolutions(lens_weighted,
                                      kernel.radial_panel_edges(0.0, 2.0 * radius))
    if r_max > 2.0 * radius:
        tail, err_tail = both_resolutions(
            profile_weighted, kernel.radial_panel_edges(2.0 * radius, r_max))
        envelope_from = r_max
    else:
        tail, err_tail = 0.0, 0.0
        envelope_from = 2.0 * radius
    beyond = kernel.radial_tail_bound(envelope_from)

    value = sigma * (main + ball * tail)
    error = sigma * (err_main + ball * (err_tail + beyond))
    return RadialVariance(value=value, error_estimate=error, r_max=float(r_max))


def variance_subadditive_upper(kernel: Kernel, union: DisjointBallUnion,
                               scale: float = 1.0) -> float:
    """Upper bound for the dilated union's variance: sum over its balls.

    Valid because disjoint windows have negatively correlated counts and
    the kernels here are translation invariant; disjointness survives
    dilation by homogeneity.
    """
    if scale <= 0:
        raise ValueError("scale must be positive")
    return sum(variance_radial(kernel, scale * b.radius).value
               for b in union.balls)


# ---------------------------------------------------------------------------
# hyperuniformity curves and the log-variance asymptotics


@dataclass(frozen=True)
class CurvePoint:
    scale: float
    e_count: float
    var_spectral: float | None
    var_radial: float | None
    ratio: float

    @property
    def best_variance(self) -> float:
        return self.var_radial if self.var_radial is not None else self.var_spectral


def hyperuniformity_curve(kernel: Kernel, region: Region, scales,
                          include_spectral: bool = False,
                          node_cap: int = 4096,
                          nodes_per_unit: float | None = None,
                          n_per_axis: int | None = None):
    """(scale, E, var, var/E) along dilations of a ball or ball union.

    The radial route covers balls (and bounds unions from above); the
    spectral route is added on request for scales whose grids fit the
    node cap (``nodes_per_unit`` and ``n_per_axis`` both None fills the
    cap). Returns the list of points; the ratio column is the
    hyperuniformity diagnostic and should decay along the ladder.
    """
    scales = [float(s) for s in scales]
    points = []
    for scale in scales:
        dilated = region.dilate(scale)
        e_count = expected_count(kernel, dilated)
        if isinstance(region, Ball):
            var_rad = variance_radial(kernel, scale * region.radius).value
        elif isinstance(region, DisjointBallUnion):
            var_rad = variance_subadditive_upper(kernel, region, scale)
        else:
            var_rad = None
        var_spec = None
        if include_spectral:
            try:
                bbox = dilated.bounding_box()
                side = float((bbox.upper - bbox.lower).max())
                if n_per_axis is not None:
                    n_axis = n_per_axis
                elif nodes_per_unit is None:
                    n_axis = max_n_per_axis(dilated, node_cap)
                else:
                    n_axis = max(2, int(math.ceil(nodes_per_unit * side)))
                grid = build_grid(dilated, n_axis, node_cap=node_cap)
                var_spec = variance_spectral(
                    spectral_decompose(assemble_operator(kernel, grid),
                                       eigenvectors=False))
            except (ResourceLimitError, DegenerateGridError):
                var_spec = None
        best = var_rad if var_rad is not None else var_spec
        if best is None:
            raise ValueError(
                "no variance route available: non-ball region beyond the "
                "spectral node cap"
            )
        points.append(CurvePoint(scale=scale, e_count=e_count,
                                 var_spectral=var_spec, var_radial=var_rad,
                                 ratio=best / e_count))
    return points


def ratios_decreasing(points) -> bool:
    ratios = [p.ratio for p in points]
    return all(b < a for a, b in zip(ratios, ratios[1:]))


def asymptotic_constant(d: int) -> float:
    """Leading log(R) R^{d-1} variance coefficient of the band-limited family."""
    if d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d}")
    return 1.0 / (2.0 ** (d - 1) * math.pi ** 1.5
                  * math.gamma((d + 1) / 2.0) * math.gamma(d / 2.0))


def asymptotic_constant_geometric(d: int) -> float:
    """The same coefficient as c_{d-1} sigma_{d-1} / (2^d pi^{d+1}).

    This is the form the coefficient takes before the Gamma-function
    simplification: the lens prefactor 2 c_{d-1}, the sphere area
    sigma_{d-1}, the profile normalization (2 pi)^{-d}, the 1/pi of the
    squared-Bessel mean, and the 1/(2R) of the leading series term.
    """
    if d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d}")
    return (_ball_volume_unchecked(d - 1) * unit_sphere_area(d)
            / (2.0 ** d * math.pi ** (d + 1)))


@dataclass(frozen=True)
class AsymptoticFit:
    dim: int
    scales: tuple
    variances: tuple
    slope: float
    intercept: float
    reference_constant: float
    window_low: float

    @property
    def relative_deviation(self) -> float:
        return abs(self.slope - self.reference_constant) / self.reference_constant


def fit_asymptotics(dim: int, scales, variances) -> AsymptoticFit:
    """Regress var / R^{d-1} on log R over the largest half-decade.

    The restriction to the top half-decade keeps the O(R^{d-1})
    correction from contaminating the slope; radii must span at least a
    decade so that a half-decade window exists comfortably.
    """
    scales = np.asarray([float(s) for s in scales])
    variances = np.asarray([float(v) for v in variances])
    if scales.size != variances.size or scales.size < 4:
        raise FitRangeError("need at least four (scale, variance) pairs")
    if scales.max() < 10.0 * scales.min() * (1.0 - 1e-12):
        raise FitRangeError(
            f"scales span {scales.max() / scales.min():.2f}x; one decade required"
        )
    window_low = scales.max() / math.sqrt(10.0)
    sel = scales >= window_low * (1.0 - 1e-12)
    if sel.sum() < 3:
        raise FitRangeError("fewer than three points in the top half-decade")
    y = variances[sel] / scales[sel] ** (dim - 1)
    x = np.log(scales[sel])
    design = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    return AsymptoticFit(dim=dim, scales=tuple(scales), variances=tuple(variances),
                         slope=float(slope), intercept=float(intercept),
                         reference_constant=asymptotic_constant(dim),
                         window_low=float(window_low))


# ---------------------------------------------------------------------------
# combined report


@dataclass(eq=False)
class VarianceReport:
    region: Region
    e_count: float
    var_spectral: float | None
    var_radial: float | None
    var_upper_subadditive: float | None
    radial_error_estimate: float | None

    @property
    def best_variance(self) -> float:
        for v in (self.var_radial, self.var_upper_subadditive, self.var_spectral):
            if v is not None:
                return v
        raise ValueError("report holds no variance value")

    @property
    def ratio(self) -> float:
        return self.best_variance / self.e_count


def variance_report(kernel: Kernel, region: Region,
                    spectral: SpectralData | None = None) -> VarianceReport:
    """Assemble every variance route applicable to the region."""
    e_count = expected_count(kernel, region)
    var_spec = variance_spectral(spectral) if spectral is not None else None
    var_rad = None
    var_sub = None
    rad_err = None
    if isinstance(region, Ball):
        rv = variance_radial(kernel, region.radius)
        var_rad, rad_err = rv.value, rv.error_estimate
    elif isinstance(region, DisjointBallUnion):
        var_sub = variance_subadditive_upper(kernel, region)
    return VarianceReport(region=region, e_count=e_count,
                          var_spectral=var_spec, var_radial=var_rad,
                          var_upper_subadditive=var_sub,
                          radial_error_estimate=rad_err)
