import math

import numpy as np
import pytest
from pytest import approx

from accspec.discretize import (DegenerateGridError, OperatorMatrix,
                                QuadratureGrid, ResourceLimitError,
                                assemble_operator, build_grid, max_n_per_axis,
                                spectral_decompose)
from accspec.geometry import Ball, Box, DisjointBallUnion
from accspec.kernels import GinibreKernel, sine_kernel


def test_interval_midpoint_rule():
    grid = build_grid(Box(np.array([-1.0]), np.array([1.0])), 4)
    assert grid.nodes[:, 0] == approx([-0.75, -0.25, 0.25, 0.75])
    assert grid.weights == approx([0.5] * 4)
    assert grid.volume_defect == approx(0.0, abs=1e-15)


def test_disk_coarse_grid_keeps_corner_midpoints():
    grid = build_grid(Ball(np.zeros(2), 1.0), 2)
    assert grid.n_nodes == 4
    assert sorted(map(tuple, np.abs(grid.nodes))) == [(0.5, 0.5)] * 4
    assert grid.weight_sum == approx(4.0)
    # coarse clipping error against pi is tracked, not hidden
    assert grid.volume_defect == approx(4.0 - math.pi)


def test_interval_as_ball_exact_weight_sum():
    grid = build_grid(Ball(np.array([0.0]), 1.0), 10)
    assert grid.weight_sum == approx(2.0, abs=1e-14)


def test_node_cap_enforced():
    with pytest.raises(ResourceLimitError):
        build_grid(Box(np.array([0.0]), np.array([1.0])), 100, node_cap=50)


def test_degenerate_grid_detected():
    thin = DisjointBallUnion((Ball(np.array([0.0]), 0.01),
                              Ball(np.array([10.0]), 0.01)))
    with pytest.raises(DegenerateGridError):
        build_grid(thin, 4)


def test_max_n_per_axis_respects_cap():
    ball = Ball(np.zeros(2), 1.0)
    n = max_n_per_axis(ball, node_cap=4096)
    assert build_grid(ball, n, node_cap=4096).n_nodes <= 4096
    with pytest.raises(ResourceLimitError):
        build_grid(ball, n + 1, node_cap=4096)


def test_grid_determinism():
    a = build_grid(Ball(np.zeros(2), 1.0), 17)
    b = build_grid(Ball(np.zeros(2), 1.0), 17)
    assert np.array_equal(a.nodes, b.nodes)
    assert np.array_equal(a.weights, b.weights)
    k = GinibreKernel(1)
    assert np.array_equal(assemble_operator(k, a).matrix,
                          assemble_operator(k, b).matrix)


def test_single_node_sine_operator():
    grid = QuadratureGrid(region=Box(np.array([0.0]), np.array([1.0])),
                          nodes=np.array([[0.3]]), weights=np.array([0.7]),
                          spacing=np.array([1.0]))
    op = assemble_operator(sine_kernel(), grid)
    assert op.matrix == approx(np.array([[0.7 / math.pi]]))


def test_ginibre_operator_diagonal_is_weights():
    grid = build_grid(Ball(np.zeros(2), 1.0), 8)
    op = assemble_operator(GinibreKernel(1), grid)
    assert np.real(np.diag(op.matrix)) == approx(grid.weights, rel=1e-14)
    assert np.abs(op.matrix - op.matrix.conj().T).max() < 1e-15


def test_sine_trace_on_symmetric_interval():
    # diagonal is constant 1/pi, midpoint integrates constants exactly
    grid = build_grid(Box(np.array([-math.pi]), np.array([math.pi])), 123)
    op = assemble_operator(sine_kernel(), grid)
    assert op.trace == approx(2.0, abs=1e-12)


def test_dimension_mismatch_rejected():
    grid = build_grid(Box(np.array([0.0]), np.array([1.0])), 4)
    with pytest.raises(ValueError):
        assemble_operator(GinibreKernel(1), grid)


def _toy_operator(matrix):
    n = matrix.shape[0]
    grid = QuadratureGrid(region=Box(np.zeros(1), np.ones(1)),
                          nodes=np.linspace(0, 1, n)[:, None],
                          weights=np.full(n, 1.0 / n),
                          spacing=np.array([1.0 / n]))
    return OperatorMatrix(matrix=np.asarray(matrix, dtype=float), grid=grid)


def test_zero_matrix_spectrum():
    sd = spectral_decompose(_toy_operator(np.zeros((3, 3))))
    assert sd.eigenvalues == approx([0.0, 0.0, 0.0])


def test_identity_matrix_spectrum():
    sd = spectral_decompose(_toy_operator(np.eye(2)))
    assert sd.eigenvalues == approx([1.0, 1.0])


def test_eigenvalues_descending_and_clamped(sine_run):
    mu = sine_run.spectral.eigenvalues
    assert np.all(np.diff(mu) <= 1e-14)
    clamped = sine_run.spectral.eigenvalues_clamped
    assert clamped.min() >= 0.0 and clamped.max() <= 1.0


def test_sine_reference_spectrum(sine_run):
    sd = sine_run.spectral
    assert sd.trace == approx(10.0 / math.pi, rel=1e-10)
    assert sd.eigenvalues[0] > 0.99
    # plunge: the count of eigenvalues above 1/2 brackets the expected count
    n_half = sd.count_above(0.5)
    assert abs(n_half - sd.trace) <= 1.0


def test_trace_identity(sine_run):
    assert sine_run.spectral.trace == approx(sine_run.operator.trace,
                                             abs=1e-10)


def test_eigenvector_orthonormality(sine_run):
    v = sine_run.spectral.vectors
    gram = v.T @ v
    assert np.abs(gram - np.eye(v.shape[1])).max() < 1e-10


def test_eigenpair_residual(sine_run):
    a = sine_run.operator.matrix
    v = sine_run.spectral.vectors
    mu = sine_run.spectral.eigenvalues
    resid = np.abs(a @ v - v * mu[None, :]).max()
    assert resid < 1e-9 * max(abs(mu[0]), abs(mu[-1]))


def test_values_only_decomposition_matches(sine_run):
    sd = spectral_decompose(sine_run.operator, eigenvectors=False)
    assert sd.vectors is None
    assert sd.eigenvalues == approx(sine_run.spectral.eigenvalues, abs=1e-11)
    with pytest.raises(ValueError):
        sd.phi_values()


@pytest.mark.parametrize("n", [100, 200, 400])
def test_spectrum_overshoot_small(n):
    grid = build_grid(Box(np.array([-5.0]), np.array([5.0])), n)
    sd = spectral_decompose(assemble_operator(sine_kernel(), grid),
                            eigenvectors=False)
    overshoot = max(float(sd.eigenvalues.max()) - 1.0,
                    -float(sd.eigenvalues.min()), 0.0)
    assert overshoot <= 0.05


def test_refinement_ladder_cauchy():
    region = Box(np.array([-5.0]), np.array([5.0]))
    stats = {}
    overshoots = {}
    for n in (100, 200, 400):
        sd = spectral_decompose(assemble_operator(sine_kernel(),
                                                  build_grid(region, n)),
                                eigenvectors=False)
        stats[n] = (sd.trace, float(np.sum(sd.eigenvalues ** 2)))
        overshoots[n] = max(float(sd.eigenvalues.max()) - 1.0,
                            -float(sd.eigenvalues.min()), 0.0)
    tr200, sq200 = stats[200]
    tr400, sq400 = stats[400]
    assert abs(tr400 - tr200) / tr400 < 0.01
    assert abs(sq400 - sq200) / sq400 < 0.01
    assert overshoots[400] <= overshoots[100] + 1e-12


def test_phi_values_scaling(sine_run):
    phi = sine_run.spectral.phi_values(slice(0, 2))
    w = sine_run.grid.weights
    # discrete L2 normalization of the eigenfunctions
    assert np.sum(np.abs(phi) ** 2 * w[:, None], axis=0) == approx([1.0, 1.0])
