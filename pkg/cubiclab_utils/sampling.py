"""
Seeded sampling helpers

Every stream is an independent PCG64 generator keyed by integer tuples, so
a sample drawn for (seed, index) never depends on how work is split.
"""

import numpy as np


def rng_for(*key: int) -> np.random.Generator:
    """Generator for the substream identified by the integer key"""
    return np.random.default_rng([int(k) for k in key])


def normalize_rows(X: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(X, axis=-1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return X / norms


def sphere_points(dim: int, count: int, *key: int) -> np.ndarray:
    """count uniform points on the unit sphere in R^dim (normalized Gaussians)"""
    rng = rng_for(*key) if key else rng_for(0)
    return normalize_rows(rng.standard_normal((count, dim)))


def haar_orthogonal(dim: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Stack of Haar-distributed orthogonal matrices, shape (count, dim, dim)

    QR of a Gaussian matrix with the signs of diag(R) folded into Q.
    """
    A = rng.standard_normal((count, dim, dim))
    Q, R = np.linalg.qr(A)
    signs = np.sign(np.diagonal(R, axis1=1, axis2=2))
    signs[signs == 0.0] = 1.0
    return Q * signs[:, np.newaxis, :]
