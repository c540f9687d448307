"""
M-hyperbolicity of symmetric matrices and sampled estimates for Hessian sets

A symmetric A with ascending eigenvalues l_1 <= ... <= l_n is M-hyperbolic
when it vanishes, or l_1 < 0 < l_n and 1/M <= -l_1/l_n <= M.
"""

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from cubiclab_api.hessian_w import RayFunction
from cubiclab_utils.logger import get_logger
from cubiclab_utils.sampling import haar_orthogonal, normalize_rows, rng_for

logger = get_logger(__name__)

DEFAULT_ZERO_TOL = 1e-10
DEFAULT_CHUNK = 4096

# local search from the best sampled pairs
DEFAULT_REFINE_STARTS = 16
DEFAULT_REFINE_SWEEPS = 200
DEFAULT_REFINE_STEP = 5e-2
REFINE_MIN_STEP = 1e-7

# orbit mode scores eigenbasis alignments up to this dimension (n! permutations)
ALIGN_MAX_DIM = 6


class HyperbolicityKind(Enum):
    ZERO = "zero_class"
    INFINITE = "infinite"
    FINITE = "finite"


@dataclass
class MHyperbolicity:
    """Verdict for one matrix; M is 1 for the zero class and inf when signs fail"""

    kind: HyperbolicityKind
    M: float
    lambda_min: float
    lambda_max: float

    def to_dict(self) -> Dict:
        return {
            "kind": self.kind.value,
            "M": self.M,
            "lambda_min": self.lambda_min,
            "lambda_max": self.lambda_max,
        }


def _classify(lmin: np.ndarray, lmax: np.ndarray, zero: np.ndarray):
    """Vectorized kinds and M values"""
    finite = (lmin < 0.0) & (lmax > 0.0) & ~zero
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(finite, -lmin / np.where(finite, lmax, 1.0), 1.0)
        M = np.where(finite, np.maximum(ratio, 1.0 / ratio), np.inf)
    M = np.where(zero, 1.0, M)
    return finite, M


def m_hyperbolicity(A, zero_tol: float = DEFAULT_ZERO_TOL) -> MHyperbolicity:
    A = np.asarray(A, dtype=float)
    values = np.linalg.eigvalsh(A)
    lmin, lmax = float(values[0]), float(values[-1])
    if np.max(np.abs(A)) <= zero_tol:
        return MHyperbolicity(HyperbolicityKind.ZERO, 1.0, lmin, lmax)
    if not (lmin < 0.0 < lmax):
        return MHyperbolicity(HyperbolicityKind.INFINITE, math.inf, lmin, lmax)
    ratio = -lmin / lmax
    return MHyperbolicity(HyperbolicityKind.FINITE, max(ratio, 1.0 / ratio), lmin, lmax)


@dataclass
class RefineSettings:
    """Budget of the local search that follows sampling"""

    starts: int = DEFAULT_REFINE_STARTS
    sweeps: int = DEFAULT_REFINE_SWEEPS
    step: float = DEFAULT_REFINE_STEP
    min_step: float = REFINE_MIN_STEP

    def to_dict(self) -> Dict:
        return {"starts": self.starts, "sweeps": self.sweeps, "step": self.step, "min_step": self.min_step}


@dataclass
class HyperbolicityReport:
    """Sampled estimate of the hyperbolicity constant of a Hessian set"""

    M_sup: float
    n_pairs: int
    violations: int
    zero_pairs: int
    worst: Dict
    zero_tol: float
    seed: int
    orbit: bool
    alpha: float
    n_anchors: int = 0
    refined: bool = False
    aligned: bool = False
    sampled_M_max: float = 1.0
    refine_settings: Optional[RefineSettings] = None
    lambda_min: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    lambda_max: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    M: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)

    @property
    def hyperbolic_evidence(self) -> bool:
        return self.violations == 0

    def samples(self) -> Dict[str, np.ndarray]:
        return {
            "pair_index": np.arange(len(self.M)),
            "lambda_min": self.lambda_min,
            "lambda_max": self.lambda_max,
            "M": self.M,
        }

    def to_dict(self) -> Dict:
        return {
            "M_sup": self.M_sup,
            "sampled_M_max": self.sampled_M_max,
            "n_pairs": self.n_pairs,
            "violations": self.violations,
            "zero_pairs": self.zero_pairs,
            "hyperbolic_evidence": self.hyperbolic_evidence,
            "worst": self.worst,
            "zero_tol": self.zero_tol,
            "seed": self.seed,
            "orbit": self.orbit,
            "alpha": self.alpha,
            "n_anchors": self.n_anchors,
            "refined": self.refined,
            "aligned": self.aligned,
            "refine": None if self.refine_settings is None else self.refine_settings.to_dict(),
        }


def _zero_mask(D: np.ndarray, HX: np.ndarray, HY: np.ndarray, zero_tol: float) -> np.ndarray:
    scale = 1.0 + np.max(np.abs(HX), axis=(1, 2)) + np.max(np.abs(HY), axis=(1, 2))
    return np.max(np.abs(D), axis=(1, 2)) <= zero_tol * scale


def best_alignment(a: np.ndarray, b: np.ndarray, zero_tol: float, scale: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Largest M of diag(a) - P diag(b) P^T over permutation matrices P

    a and b hold ascending eigenvalues row by row. Returns the M values and
    the index of the maximizing permutation in itertools.permutations order.
    """
    n = a.shape[1]
    best = np.full(len(a), -np.inf)
    best_index = np.zeros(len(a), dtype=int)
    for index, perm in enumerate(itertools.permutations(range(n))):
        diff = a - b[:, perm]
        zero = np.max(np.abs(diff), axis=1) <= zero_tol * scale
        _, M = _classify(diff.min(axis=1), diff.max(axis=1), zero)
        better = M > best
        best = np.where(better, M, best)
        best_index = np.where(better, index, best_index)
    return best, best_index


def _pair_stats(r: RayFunction, X: np.ndarray, Y: np.ndarray, U: Optional[np.ndarray], zero_tol: float, align: bool = False):
    """Spectral extremes and M of H(x) - U H(y) U^T, plus the aligned score when requested"""
    HX = r.hessian_batch(X)
    HY = r.hessian_batch(Y)
    HYU = HY if U is None else U @ HY @ np.swapaxes(U, 1, 2)
    D = HX - HYU
    values = np.linalg.eigvalsh(D)
    zero = _zero_mask(D, HX, HY, zero_tol)
    lmin, lmax = values[:, 0], values[:, -1]
    _, M = _classify(lmin, lmax, zero)
    score = M
    if align:
        scale = 1.0 + np.max(np.abs(HX), axis=(1, 2)) + np.max(np.abs(HY), axis=(1, 2))
        aligned, _ = best_alignment(np.linalg.eigvalsh(HX), np.linalg.eigvalsh(HY), zero_tol, scale)
        score = np.maximum(M, aligned)
    return lmin, lmax, M, zero, score


def _aligned_rotation(r: RayFunction, x: np.ndarray, y: np.ndarray, zero_tol: float) -> np.ndarray:
    """Orthogonal U carrying the eigenbasis of H(y) onto that of H(x) in the best order"""
    HX = r.hessian_batch(x[np.newaxis])[0]
    HY = r.hessian_batch(y[np.newaxis])[0]
    a, P = np.linalg.eigh(HX)
    b, Q = np.linalg.eigh(HY)
    scale = np.array([1.0 + np.max(np.abs(HX)) + np.max(np.abs(HY))])
    _, best_index = best_alignment(a[np.newaxis], b[np.newaxis], zero_tol, scale)
    perm = list(next(itertools.islice(itertools.permutations(range(len(a))), int(best_index[0]), None)))
    return P @ Q[:, perm].T


def _givens(n: int, i: int, j: int, angle: float) -> np.ndarray:
    G = np.eye(n)
    c, s = math.cos(angle), math.sin(angle)
    G[i, i] = G[j, j] = c
    G[i, j], G[j, i] = -s, s
    return G


def _trials(x: np.ndarray, y: np.ndarray, U: Optional[np.ndarray], step: float, rotate: bool):
    """All single coordinate moves of x and y and single-plane rotations of U"""
    n = len(x)
    moves = (np.kron(np.eye(n), np.ones((2, 1))) * np.tile([[1.0], [-1.0]], (n, 1))) * step
    X = normalize_rows(np.vstack([x + moves, np.repeat(x[np.newaxis], 2 * n, axis=0)]))
    Y = normalize_rows(np.vstack([np.repeat(y[np.newaxis], 2 * n, axis=0), y + moves]))
    if U is None:
        return X, Y, None

    Us = np.repeat(U[np.newaxis], 4 * n, axis=0)
    if rotate:
        rotations = [U @ _givens(n, i, j, sign * step) for i, j in itertools.combinations(range(n), 2) for sign in (1.0, -1.0)]
        X = np.vstack([X, np.repeat(x[np.newaxis], len(rotations), axis=0)])
        Y = np.vstack([Y, np.repeat(y[np.newaxis], len(rotations), axis=0)])
        Us = np.concatenate([Us, np.asarray(rotations)])
    return X, Y, Us


def _refine(r: RayFunction, x: np.ndarray, y: np.ndarray, U: Optional[np.ndarray], M: float, zero_tol: float,
            settings: RefineSettings, align: bool = False):
    """Best-improvement coordinate search increasing M

    x and y move on the unit sphere. In orbit mode U turns through Givens
    rotations, unless align is set: then every trial is scored by its best
    eigenbasis alignment and U is recovered from the final pair.
    """
    step = settings.step
    for _ in range(settings.sweeps):
        if step < settings.min_step or math.isinf(M):
            break
        X, Y, Us = _trials(x, y, U, step, rotate=not align)
        _, _, trial_M, _, score = _pair_stats(r, X, Y, Us, zero_tol, align)
        values = score if align else trial_M
        best = int(np.argmax(values))
        if values[best] > M:
            x, y, M = X[best], Y[best], float(values[best])
            if Us is not None:
                U = Us[best]
        else:
            step *= 0.5
    return x, y, U, M


def _locate(results: List, index: int):
    offset = 0
    for X, Y, U, _ in results:
        if index < offset + len(X):
            local = index - offset
            return X[local], Y[local], None if U is None else U[local]
        offset += len(X)
    raise IndexError(index)


def hyperbolic_set_estimate(
    r: RayFunction,
    n_pairs: int = 100000,
    seed: int = 0,
    orbit: bool = False,
    zero_tol: float = DEFAULT_ZERO_TOL,
    anchors: Optional[Sequence] = None,
    chunk_size: int = DEFAULT_CHUNK,
    workers: int = 1,
    refine: bool = True,
    progress: bool = False,
    refine_settings: Optional[RefineSettings] = None,
) -> HyperbolicityReport:
    """Sample pairs of unit vectors and measure M-hyperbolicity of H(x) - U H(y) U^T

    Anchor directions a contribute the pairs (a, -a) ahead of the random ones.
    With refine set, a local search over (x, y) and, in orbit mode, over U
    starts from the best sampled pairs; M_sup is the largest value found.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be at least 1")
    n = r.u.dim
    settings = refine_settings or RefineSettings()
    align = orbit and n <= ALIGN_MAX_DIM

    anchor_X = normalize_rows(np.asarray(anchors, dtype=float).reshape(-1, n)) if anchors is not None and len(anchors) else np.zeros((0, n))
    n_chunks = (n_pairs + chunk_size - 1) // chunk_size

    def chunk(k: int):
        count = min(chunk_size, n_pairs - k * chunk_size)
        rng = rng_for(seed, k)
        X = normalize_rows(rng.standard_normal((count, n)))
        Y = normalize_rows(rng.standard_normal((count, n)))
        U = haar_orthogonal(n, count, rng) if orbit else None
        return X, Y, U, _pair_stats(r, X, Y, U, zero_tol, align)

    results = []
    if len(anchor_X):
        anchor_U = np.repeat(np.eye(n)[np.newaxis], len(anchor_X), axis=0) if orbit else None
        results.append((anchor_X, -anchor_X, anchor_U, _pair_stats(r, anchor_X, -anchor_X, anchor_U, zero_tol, align)))

    chunk_ids = range(n_chunks)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results.extend(tqdm(executor.map(chunk, chunk_ids), total=n_chunks, disable=not progress, desc="pairs"))
    else:
        results.extend(chunk(k) for k in tqdm(chunk_ids, disable=not progress, desc="pairs"))

    lmin = np.concatenate([res[3][0] for res in results])
    lmax = np.concatenate([res[3][1] for res in results])
    M = np.concatenate([res[3][2] for res in results])
    zero = np.concatenate([res[3][3] for res in results])
    score = np.concatenate([res[3][4] for res in results])

    violations = int(np.sum(np.isinf(M)))
    zero_pairs = int(np.sum(zero))

    worst_index = int(np.argmax(M))
    wx, wy, wU = _locate(results, worst_index)
    sampled_max = float(M[worst_index]) if zero_pairs < len(M) else 1.0
    m_sup = sampled_max

    refined = False
    if refine and violations == 0 and zero_pairs < len(M):
        starts = np.argsort(-score, kind="stable")[: settings.starts]
        for start in starts:
            x, y, U = _locate(results, int(start))
            x, y, U, found = _refine(r, x, y, U, float(score[start]), zero_tol, settings, align)
            if align:
                # keep whichever of the carried and the aligned U scores higher at (x, y), then turn it
                candidates = np.stack([U, _aligned_rotation(r, x, y, zero_tol)])
                _, _, current, _, _ = _pair_stats(r, np.stack([x, x]), np.stack([y, y]), candidates, zero_tol)
                pick = int(np.argmax(current))
                U = candidates[pick]
                x, y, U, found = _refine(r, x, y, U, float(current[pick]), zero_tol, settings)
            if found > m_sup:
                wx, wy, wU, m_sup = x, y, U, found
                refined = True
            if math.isinf(m_sup):
                break
        if refined:
            logger.debug(f"refinement raised M_sup from {sampled_max:.6g} to {m_sup:.6g}")
        if math.isinf(m_sup):
            violations += 1

    worst = {"x": wx.tolist(), "y": wy.tolist(), "U": None if wU is None else wU.tolist(), "M": m_sup}
    logger.info(f"{len(M)} pairs: M_sup={m_sup:.6g}, violations={violations}, zero pairs={zero_pairs}")
    return HyperbolicityReport(
        M_sup=m_sup if violations == 0 else math.inf,
        n_pairs=len(M),
        violations=violations,
        zero_pairs=zero_pairs,
        worst=worst,
        zero_tol=zero_tol,
        seed=seed,
        orbit=orbit,
        alpha=r.alpha,
        n_anchors=len(anchor_X),
        refined=refined,
        aligned=align,
        sampled_M_max=sampled_max,
        refine_settings=settings if refine else None,
        lambda_min=lmin,
        lambda_max=lmax,
        M=M,
    )
