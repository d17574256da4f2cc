import numpy as np

from accspec.discretize import QuadratureGrid, SpectralData
from accspec.geometry import Box


def synthetic_spectral(mu):
    """SpectralData with a prescribed spectrum on a dummy unit grid."""
    mu = np.asarray(mu, dtype=float)
    n = mu.size
    grid = QuadratureGrid(region=Box(np.zeros(1), np.ones(1)),
                          nodes=np.linspace(0, 1, n)[:, None],
                          weights=np.full(n, 1.0 / n),
                          spacing=np.array([1.0 / n]))
    return SpectralData(eigenvalues=mu, eigenvalues_clamped=np.clip(mu, 0, 1),
                        vectors=np.eye(n), grid=grid)
