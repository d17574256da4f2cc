"""Midpoint quadrature grids and the matrix form of the restricted operator.

A region is discretized by the midpoint rule on its bounding box, keeping
the cells whose midpoints lie inside. The restriction of a kernel operator
to the region then becomes the Hermitian matrix

    A[i, j] = sqrt(w_i) K(x_i, x_j) sqrt(w_j),

whose eigenvalues approximate the continuum restriction's spectrum in
[0, 1] and whose scaled eigenvectors give eigenfunction values at the
nodes. Everything is deterministic; no randomness enters anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Region
from .kernels import Kernel

DEFAULT_NODE_CAP = 4096
_CANDIDATE_CELL_CAP = 4_000_000


class ResourceLimitError(RuntimeError):
    """A grid or matrix would exceed the configured size cap."""


class DegenerateGridError(ValueError):
    """No cell midpoint fell inside the region at this resolution."""


@dataclass(eq=False)
class QuadratureGrid:
    """Nodes and positive weights discretizing a region.

    ``volume_defect`` records |sum(w) - volume|; it is zero for boxes
    and tracks the cell-clipping error for curved regions.
    """

    region: Region
    nodes: np.ndarray
    weights: np.ndarray
    spacing: np.ndarray

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def weight_sum(self) -> float:
        return float(self.weights.sum())

    @property
    def volume_defect(self) -> float:
        return abs(self.weight_sum - self.region.volume())


def build_grid(region: Region, n_per_axis: int,
               node_cap: int = DEFAULT_NODE_CAP) -> QuadratureGrid:
    """Midpoint-rule grid: bounding-box cells kept iff their midpoint is inside."""
    if n_per_axis < 2:
        raise ValueError("n_per_axis must be at least 2")
    bbox = region.bounding_box()
    d = bbox.dim
    if n_per_axis ** d > _CANDIDATE_CELL_CAP:
        raise ResourceLimitError(
            f"{n_per_axis}^{d} candidate cells exceed the generation cap"
        )
    spacing = (bbox.upper - bbox.lower) / n_per_axis
    axes = [bbox.lower[k] + spacing[k] * (np.arange(n_per_axis) + 0.5)
            for k in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    keep = region.contains_points(pts)
    nodes = pts[keep]
    if nodes.shape[0] == 0:
        raise DegenerateGridError(
            f"region thinner than cells at n_per_axis={n_per_axis}"
        )
    if nodes.shape[0] > node_cap:
        raise ResourceLimitError(
            f"grid has {nodes.shape[0]} nodes, cap is {node_cap}"
        )
    cell_volume = float(np.prod(spacing))
    weights = np.full(nodes.shape[0], cell_volume)
    return QuadratureGrid(region=region, nodes=nodes, weights=weights,
                          spacing=spacing)


def max_n_per_axis(region: Region, node_cap: int = DEFAULT_NODE_CAP) -> int:
    """Largest n_per_axis whose grid stays within the node cap."""
    bbox = region.bounding_box()
    fill = region.volume() / bbox.volume()
    n = int((node_cap / fill) ** (1.0 / bbox.dim)) + 1
    while n > 2:
        try:
            build_grid(region, n, node_cap=node_cap)
            return n
        except (ResourceLimitError, DegenerateGridError):
            n -= 1
    return 2


@dataclass(eq=False)
class OperatorMatrix:
    """Symmetrized Nystrom matrix of the kernel restricted to the grid."""

    matrix: np.ndarray
    grid: QuadratureGrid

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))


def assemble_operator(kernel: Kernel, grid: QuadratureGrid) -> OperatorMatrix:
    if kernel.ambient_dim != grid.dim:
        raise ValueError(
            f"kernel acts on R^{kernel.ambient_dim} but grid lives in R^{grid.dim}"
        )
    sw = np.sqrt(grid.weights)
    a = kernel.eval_matrix(grid.nodes, grid.nodes)
    a = a * sw[:, None] * sw[None, :]
    a = 0.5 * (a + a.conj().T)
    return OperatorMatrix(matrix=a, grid=grid)


@dataclass(eq=False)
class SpectralData:
    """Eigendecomposition of an OperatorMatrix, eigenvalues descending.

    ``eigenvalues`` are the raw solver outputs (may overshoot [0, 1] by
    the discretization slack); ``eigenvalues_clamped`` are clipped to
    [0, 1] for use in the variance and count formulas, which are
    sign-sensitive to the overshoot. ``vectors`` is None when the
    decomposition was values-only.
    """

    eigenvalues: np.ndarray
    eigenvalues_clamped: np.ndarray
    vectors: np.ndarray | None
    grid: QuadratureGrid

    @property
    def trace(self) -> float:
        return float(self.eigenvalues.sum())

    def phi_values(self, j_slice=None) -> np.ndarray:
        """Eigenfunction values at the grid nodes, Phi_j(x_i) = V[i,j]/sqrt(w_i)."""
        if self.vectors is None:
            raise ValueError("decomposition was computed without eigenvectors")
        cols = self.vectors if j_slice is None else self.vectors[:, j_slice]
        return cols / np.sqrt(self.grid.weights)[:, None]

    def count_above(self, threshold: float) -> int:
        return int(np.sum(self.eigenvalues_clamped > threshold))


def spectral_decompose(operator: OperatorMatrix,
                       residual_sample: int = 16,
                       eigenvectors: bool = True) -> SpectralData:
    """Dense Hermitian eigendecomposition with a sampled residual check.

    ``eigenvectors=False`` skips the (several times more expensive)
    vector computation for eigenvalue-only consumers like the spectral
    variance; the residual check requires vectors and is then skipped.
    """
    a = operator.matrix
    try:
        if eigenvectors:
            vals, vecs = np.linalg.eigh(a)
        else:
            vals, vecs = np.linalg.eigvalsh(a), None
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(
            f"eigendecomposition failed for size {a.shape[0]} matrix "
            f"(max |entry| {np.abs(a).max():.3e}, "
            f"frobenius {np.linalg.norm(a):.3e}): {exc}"
        ) from exc
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    norm = max(abs(vals[0]), abs(vals[-1]), 1e-300)
    if vecs is not None:
        vecs = vecs[:, order]
        if residual_sample > 0:
            idx = np.unique(np.linspace(0, vals.size - 1,
                                        min(residual_sample, vals.size)).astype(int))
            resid = np.abs(a @ vecs[:, idx] - vecs[:, idx] * vals[idx][None, :]).max()
            if resid > 1e-9 * norm:
                raise RuntimeError(
                    f"eigenpair residual {resid:.3e} exceeds 1e-9 * {norm:.3e}"
                )
    return SpectralData(eigenvalues=vals,
                        eigenvalues_clamped=np.clip(vals, 0.0, 1.0),
                        vectors=vecs,
                        grid=operator.grid)
