"""Diffusion Bases over the frames of a datacube.

The frames of a datacube are the vertices of a weighted graph; the
right eigenvectors of the row-stochastic transition matrix form a basis
of R^n onto which every hyperpixel (one pixel's trajectory in time) is
projected.  The first projected coordinate, reshaped to a frame, is the
background estimate.

Conventions
-----------
* Frame-vectors are rows of an ``(n, H*W)`` array; hyperpixels are rows
  of its transpose.
* Right eigenvectors are columns of ``SpectralBasis.right_vectors``, scaled
  to unit Euclidean norm, with their largest-magnitude entry positive.
  Left eigenvectors are scaled so that ``psi_k . xi_k == 1``, which makes
  ``P == sum_k lambda_k xi_k psi_k^T``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .errors import NumericError, ParameterError, ShapeError
from .frames import normalize_0_255

ArrayLike = Union[np.ndarray, Sequence[np.ndarray]]


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    w: np.ndarray
    epsilon: float


@dataclass(frozen=True, eq=False)
class MarkovMatrix:
    p: np.ndarray
    degrees: np.ndarray


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray

    @property
    def size(self) -> int:
        return self.eigenvalues.shape[0]


@dataclass(frozen=True, eq=False)
class BackgroundFrame:
    raw: np.ndarray
    normalized: np.ndarray


def as_frame_matrix(frame_vectors: ArrayLike) -> np.ndarray:
    """Stack frame-vectors into a float64 ``(n, d)`` array."""
    if isinstance(frame_vectors, np.ndarray):
        F = np.asarray(frame_vectors, dtype=np.float64)
        if F.ndim != 2:
            raise ShapeError(f"frame-vectors must form a 2-D array, got shape {F.shape}")
        return F
    lengths = {np.asarray(v).size for v in frame_vectors}
    if len(lengths) > 1:
        raise ShapeError(f"frame-vectors have mismatched lengths {sorted(lengths)}")
    return np.asarray([np.ravel(v) for v in frame_vectors], dtype=np.float64)


def squared_distances(F: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Squared Euclidean distance from each row of ``F`` to ``x``.

    Every kernel entry in the package goes through this function so that
    incremental and full kernels agree bit for bit.
    """
    return cdist(F, x.reshape(1, -1), "sqeuclidean")[:, 0]


def affinity(sq_dist: np.ndarray, epsilon: float) -> np.ndarray:
    return np.exp(-sq_dist / epsilon)


def gaussian_kernel(frame_vectors: ArrayLike, epsilon: float) -> KernelMatrix:
    """Gaussian affinities ``exp(-||F_i - F_j||^2 / epsilon)`` between frames."""
    if not (np.isfinite(epsilon) and epsilon > 0):
        raise ParameterError(f"epsilon must be positive and finite, got {epsilon}")
    F = as_frame_matrix(frame_vectors)
    if F.shape[0] < 2:
        raise ParameterError(f"need at least 2 frame-vectors, got {F.shape[0]}")
    d2 = cdist(F, F, "sqeuclidean")
    return KernelMatrix(affinity(d2, epsilon), float(epsilon))


def median_epsilon(frame_vectors: ArrayLike) -> float:
    """Median of the pairwise squared distances; 1 when all frames coincide."""
    F = as_frame_matrix(frame_vectors)
    if F.shape[0] < 2:
        raise ParameterError(f"need at least 2 frame-vectors, got {F.shape[0]}")
    med = float(np.median(pdist(F, "sqeuclidean")))
    return med if med > 0 else 1.0


def to_markov(kernel: KernelMatrix) -> MarkovMatrix:
    w = kernel.w
    degrees = w.sum(axis=1)
    # unit diagonal guarantees degrees >= 1
    assert np.all(degrees > 0)
    return MarkovMatrix(w / degrees[:, None], degrees)


def spectral_decompose(markov: MarkovMatrix) -> SpectralBasis:
    """Full eigendecomposition of ``P`` through its symmetric conjugate.

    With ``D`` the diagonal degree matrix, ``A = D^{1/2} P D^{-1/2}`` is
    symmetric; an eigenpair ``A v = lambda v`` gives the right eigenvector
    ``D^{-1/2} v`` and the left eigenvector ``D^{1/2} v`` of ``P``.
    """
    sqrt_d = np.sqrt(markov.degrees)
    a = sqrt_d[:, None] * markov.p / sqrt_d[None, :]
    a = 0.5 * (a + a.T)
    try:
        lam, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(a) if np.all(np.isfinite(a)) else float("inf")
        raise NumericError(
            f"eigensolver did not converge (n={a.shape[0]}, cond(A)={cond:.3e}, "
            f"degree range [{markov.degrees.min():.3e}, {markov.degrees.max():.3e}])"
        ) from exc

    lam, v = lam[::-1], v[:, ::-1]
    order = np.argsort(-np.abs(lam), kind="stable")
    lam, v = lam[order], v[:, order]

    xi = v / sqrt_d[:, None]
    norms = np.linalg.norm(xi, axis=0)
    xi = xi / norms
    psi = v * sqrt_d[:, None] * norms

    lead = np.argmax(np.abs(xi), axis=0)
    signs = np.where(xi[lead, np.arange(xi.shape[1])] < 0, -1.0, 1.0)
    return SpectralBasis(lam, xi * signs, psi * signs)


def project(hyperpixels: np.ndarray, basis: SpectralBasis, eta: int) -> np.ndarray:
    """Coordinates of each hyperpixel on the first ``eta`` right eigenvectors.

    Returns an ``(num_hyperpixels, eta)`` array ``g`` with
    ``g[i, k] = hyperpixels[i] . xi_k``.
    """
    X = np.asarray(hyperpixels, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    n = basis.size
    if isinstance(eta, bool) or int(eta) != eta or not 1 <= eta <= n:
        raise ParameterError(f"eta must be an integer in [1, {n}], got {eta}")
    if X.shape[1] != n:
        raise ShapeError(f"hyperpixels have length {X.shape[1]}, basis has {n} vectors")
    return X @ basis.right_vectors[:, : int(eta)]


def background_from_kernel(
    F: np.ndarray, kernel: KernelMatrix, shape: tuple[int, int], eta: int = 1
) -> BackgroundFrame:
    """Run the decomposition on a precomputed kernel and read off the background."""
    basis = spectral_decompose(to_markov(kernel))
    g = project(F.T, basis, eta)
    raw = g[:, 0].reshape(shape)
    return BackgroundFrame(raw, normalize_0_255(raw))


def extract_background(cube: np.ndarray, config=None, *, epsilon: Optional[float] = None,
                       eta: Optional[int] = None) -> BackgroundFrame:
    """Background of a single-channel datacube ``(n, H, W)``.

    ``epsilon`` and ``eta`` default to the values in ``config`` (median
    heuristic and 1 when neither is given).
    """
    cube = np.asarray(cube, dtype=np.float64)
    if cube.ndim != 3:
        raise ShapeError(f"expected a single-channel datacube (n, H, W), got shape {cube.shape}")
    n, H, W = cube.shape
    if n < 2:
        raise ParameterError(f"background extraction needs at least 2 frames, got {n}")
    if epsilon is None and config is not None:
        epsilon = config.epsilon
    if eta is None:
        eta = config.eta if config is not None else 1
    F = cube.reshape(n, H * W)
    if epsilon is None:
        epsilon = median_epsilon(F)
    return background_from_kernel(F, gaussian_kernel(F, epsilon), (H, W), eta)
