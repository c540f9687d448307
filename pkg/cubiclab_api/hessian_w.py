"""
The ray function w(x) = s <x^2, x> / |x|^alpha and its second-order calculus

With p(x) = <x^2, x> = 6 u(x) and r = |x|:

    grad w = s [3 x^2 / r^a - a p x / r^(a+2)]
    D^2 w  = s [6 L_x / r^a - 3a (x (x) x^2 + x^2 (x) x) / r^(a+2)
                - a p I / r^(a+2) + a (a+2) p x (x) x / r^(a+4)]
    Lap w  = s [6 tr L_x / r^a - a (n + 4 - a) p / r^(a+2)]
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from cubiclab_api.cubic_form import CubicForm
from cubiclab_api.errors import (
    DegenerateProbeError,
    NotIdempotentError,
    PoleError,
    ZeroInputError,
)
from cubiclab_utils.logger import get_logger
from cubiclab_utils.sampling import sphere_points

logger = get_logger(__name__)

# Coefficients (Lap^5, Lap^3, Lap, det) of the fifth-order polynomial identity in R^5
F5_COEFFICIENTS: Dict[str, Tuple[float, float, float, float]] = {
    "derived": (5.0, 2.0 ** 10 * 3 ** 2, 2.0 ** 12 * 3 ** 5, 2.0 ** 15),
    "printed": (1.0, 2.0 ** 8 * 3 ** 2, 2.0 ** 12 * 3 ** 5, 2.0 ** 15),
}

DEFAULT_GAP_ZERO_TOL = 1e-12
DEFAULT_GAP_TOL = 1e-8


@dataclass(frozen=True)
class RayFunction:
    """w(x) = scale * <x^2, x> / |x|^alpha, positively homogeneous of degree 3 - alpha"""

    u: CubicForm
    alpha: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        if not (1.0 <= self.alpha < 2.0):
            raise ValueError(f"alpha must lie in [1, 2), got {self.alpha}")
        if not (math.isfinite(self.scale) and self.scale != 0.0):
            raise ValueError(f"scale must be finite and nonzero, got {self.scale}")

    def with_scale(self, scale: float) -> "RayFunction":
        return RayFunction(self.u, self.alpha, scale)

    def _point(self, x) -> Tuple[np.ndarray, float]:
        x = self.u.element(x)
        r = float(np.linalg.norm(x))
        if r == 0.0:
            raise ZeroInputError("w is undefined at the origin")
        return x, r

    def value(self, x) -> float:
        x, r = self._point(x)
        return self.scale * 6.0 * self.u.evaluate(x) / r ** self.alpha

    def gradient(self, x) -> np.ndarray:
        x, r = self._point(x)
        a = self.alpha
        x2 = self.u.square(x)
        p = float(x2 @ x)
        return self.scale * (3.0 * x2 / r ** a - a * p * x / r ** (a + 2))

    def hessian(self, x) -> np.ndarray:
        return self.hessian_batch(self._point(x)[0][np.newaxis, :])[0]

    def hessian_batch(self, X) -> np.ndarray:
        """D^2 w at every row of X, shape (N, n, n)"""
        X = self.u.batch(X)
        r = np.linalg.norm(X, axis=1)
        if np.any(r == 0.0):
            raise ZeroInputError("w is undefined at the origin")
        a = self.alpha
        n = self.u.dim
        L = self.u.mult_operator_batch(X)
        X2 = np.einsum("nij,nj->ni", L, X)
        p = np.einsum("ni,ni->n", X2, X)

        cross = np.einsum("ni,nj->nij", X, X2)
        H = (
            6.0 * L / (r ** a)[:, None, None]
            - 3.0 * a * (cross + np.swapaxes(cross, 1, 2)) / (r ** (a + 2))[:, None, None]
            - (a * p / r ** (a + 2))[:, None, None] * np.eye(n)
            + (a * (a + 2) * p / r ** (a + 4))[:, None, None] * np.einsum("ni,nj->nij", X, X)
        )
        return self.scale * H

    def laplacian(self, x) -> float:
        x, r = self._point(x)
        a = self.alpha
        n = self.u.dim
        p = float(self.u.square(x) @ x)
        return self.scale * (6.0 * self.u.trace_operator(x) / r ** a - a * (n + 4 - a) * p / r ** (a + 2))


def w_eval_grad(r: RayFunction, x) -> Tuple[float, np.ndarray]:
    return r.value(x), r.gradient(x)


def w_hessian(r: RayFunction, x) -> np.ndarray:
    return r.hessian(x)


def w_laplacian(r: RayFunction, x) -> float:
    return r.laplacian(x)


# ----------------------------------------------------------------------
# Idempotent spectra
# ----------------------------------------------------------------------

def _require_unit_alpha(r: RayFunction):
    if r.alpha != 1.0:
        raise ValueError("closed-form idempotent spectra need alpha = 1")


def _checked_idempotent(u: CubicForm, c, tol: float = 1e-8) -> np.ndarray:
    c = u.element(c, "idempotent")
    residual = float(np.linalg.norm(u.square(c) - c))
    if residual > tol or not np.any(c):
        raise NotIdempotentError(f"|c^2 - c| = {residual:.3e} exceeds {tol:.1e}")
    return c


@dataclass
class IdempotentSpectrum:
    """Closed-form spectrum of D^2 w at an idempotent next to a direct eigensolve"""

    closed_form: np.ndarray
    direct: np.ndarray

    @property
    def max_deviation(self) -> float:
        return float(np.max(np.abs(self.closed_form - self.direct)))

    def to_dict(self) -> Dict:
        return {
            "closed_form": self.closed_form.tolist(),
            "direct": self.direct.tolist(),
            "max_deviation": self.max_deviation,
        }


def idempotent_spectrum(r: RayFunction, c) -> IdempotentSpectrum:
    """{2/|c|} together with (6 lambda - 1)/|c| over the spectrum of L_c on c-perp"""
    _require_unit_alpha(r)
    c = _checked_idempotent(r.u, c)
    rho = float(np.linalg.norm(c))

    values = np.linalg.eigvalsh(r.u.mult_operator(c))
    # drop the eigenvalue belonging to c itself
    drop = int(np.argmin(np.abs(values - 1.0)))
    complement = np.delete(values, drop)

    closed = np.sort(r.scale * np.concatenate([[2.0 / rho], (6.0 * complement - 1.0) / rho]))
    direct = np.linalg.eigvalsh(r.hessian(c))
    return IdempotentSpectrum(closed_form=closed, direct=direct)


def char_h_rhs(t: float, c_norm: float, lc_eigenvalues: Sequence[float], variant: str = "corrected") -> float:
    """Right-hand side of the characteristic polynomial formula for H(c)"""
    n = len(lc_eigenvalues)
    if abs(c_norm * t - 5.0) <= 1e-12:
        raise PoleError(f"t = {t} is the pole 5/|c|")
    lead = c_norm * t - 2.0 if variant == "corrected" else 6.0 * c_norm * t - 2.0
    z = (1.0 + c_norm * t) / 6.0
    chi_c = float(np.prod(z - np.asarray(lc_eigenvalues)))
    return 6.0 ** n * lead / (c_norm ** n * (c_norm * t - 5.0)) * chi_c


def char_c_rhs(z: float, c_norm: float, h_eigenvalues: Sequence[float]) -> float:
    """chi_c(z) recovered from the characteristic polynomial of H(c)"""
    n = len(h_eigenvalues)
    if abs(z - 0.5) <= 1e-12:
        raise PoleError("z = 1/2 is a pole of the inverse formula")
    t = (6.0 * z - 1.0) / c_norm
    chi_h = float(np.prod(t - np.asarray(h_eigenvalues)))
    return (z - 1.0) * c_norm ** n / 6.0 ** n * chi_h / (z - 0.5)


def _relative(lhs: float, rhs: float, magnitude: float) -> float:
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), magnitude, 1e-300)


def default_charpoly_grid(c_norm: float, count: int = 20) -> List[float]:
    """count points spread over [-10, 10]/|c| avoiding 5/|c| and 2/|c|"""
    grid = np.linspace(-10.0, 10.0, count) + 0.123456789
    return [float(t / c_norm) for t in grid]


def charpoly_check(r: RayFunction, c, grid: Optional[Sequence[float]] = None, variant: str = "corrected", generic: bool = False) -> Dict:
    """Max relative residual of the characteristic-polynomial identities on a grid"""
    _require_unit_alpha(r)
    c = _checked_idempotent(r.u, c)
    rho = float(np.linalg.norm(c))
    n = r.u.dim

    H = r.hessian(c) / r.scale
    h_values = np.linalg.eigvalsh(H)
    lc_values = np.linalg.eigvalsh(r.u.mult_operator(c))
    if grid is None:
        grid = default_charpoly_grid(rho)

    for t in grid:
        if abs(rho * t - 5.0) <= 1e-9:
            raise PoleError(f"grid point t = {t} is the pole 5/|c|")

    forward = 0.0
    for t in grid:
        lhs = float(np.linalg.det(t * np.eye(n) - H))
        rhs = char_h_rhs(t, rho, lc_values, variant)
        forward = max(forward, _relative(lhs, rhs, float(np.prod(abs(t) + np.abs(h_values)))))

    inverse = 0.0
    for t in grid:
        z = (1.0 + rho * t) / 6.0
        if abs(z - 0.5) <= 1e-9:
            continue
        lhs = float(np.prod(z - lc_values))
        rhs = char_c_rhs(z, rho, h_values)
        inverse = max(inverse, _relative(lhs, rhs, float(np.prod(abs(z) + np.abs(lc_values)))))

    top = 2.0 / rho
    top_multiplicity = int(np.sum(np.abs(h_values - top) <= 1e-8 * max(1.0, top)))
    result = {
        "variant": variant,
        "grid_points": len(grid),
        "residual": forward,
        "inverse_residual": inverse,
        "two_over_c_multiplicity": top_multiplicity,
    }
    if generic:
        result["two_over_c_simple"] = top_multiplicity == 1
    return result


# ----------------------------------------------------------------------
# Gap diagnostics
# ----------------------------------------------------------------------

def gap_ratio(spectrum: Sequence[float], zero_tol: float = DEFAULT_GAP_ZERO_TOL) -> float:
    """max(|mu_1/mu_3|, |mu_n/mu_(n-2)|) for the spectrum sorted in decreasing order"""
    mu = np.sort(np.asarray(spectrum, dtype=float))[::-1]
    if mu.size < 3:
        raise ValueError("gap ratio needs at least three eigenvalues")
    if abs(mu[2]) <= zero_tol or abs(mu[-3]) <= zero_tol:
        return math.inf
    return float(max(abs(mu[0] / mu[2]), abs(mu[-1] / mu[-3])))


@dataclass
class GapScanReport:
    n_dirs: int
    delta: float
    max_ratio: float
    violations: int
    idempotent_ratios: List[float] = field(default_factory=list)
    zero_tol: float = DEFAULT_GAP_ZERO_TOL

    @property
    def condition_fails(self) -> bool:
        threshold = 2.0 - self.delta
        return self.violations > 0 or any(ratio >= threshold for ratio in self.idempotent_ratios)

    def idempotent_bound_holds(self, tol: float = DEFAULT_GAP_TOL) -> bool:
        """Every extremal idempotent direction reaches ratio 2 within tol; needs at least one"""
        return bool(self.idempotent_ratios) and all(ratio >= 2.0 - tol for ratio in self.idempotent_ratios)

    def to_dict(self) -> Dict:
        return {
            "n_dirs": self.n_dirs,
            "delta": self.delta,
            "max_ratio": self.max_ratio,
            "violations": self.violations,
            "idempotent_ratios": self.idempotent_ratios,
            "condition_fails": self.condition_fails,
            "zero_tol": self.zero_tol,
        }


def gap_scan(u: CubicForm, n_dirs: int = 1000, seed: int = 0, delta: float = 0.1, idempotents=None,
             zero_tol: float = DEFAULT_GAP_ZERO_TOL) -> GapScanReport:
    """Gap ratios of spectrum(L_d / 2) over sampled directions and extremal idempotents"""
    if n_dirs < 1:
        raise ValueError("n_dirs must be at least 1")
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta}")

    D = sphere_points(u.dim, n_dirs, seed, 0)
    spectra = np.linalg.eigvalsh(0.5 * u.mult_operator_batch(D))
    ratios = np.array([gap_ratio(s, zero_tol) for s in spectra])

    if idempotents is None:
        from cubiclab_api.idempotent_engine import newton_search
        idempotents = newton_search(u, n_starts=32, seed=seed)

    idem_ratios = []
    for record in idempotents:
        if record.square_zero_witness or not record.extremal:
            continue
        d = record.c / np.linalg.norm(record.c)
        idem_ratios.append(gap_ratio(np.linalg.eigvalsh(0.5 * u.mult_operator(d)), zero_tol))

    return GapScanReport(
        n_dirs=n_dirs,
        delta=delta,
        max_ratio=float(ratios.max()),
        violations=int(np.sum(ratios >= 2.0 - delta)),
        idempotent_ratios=idem_ratios,
        zero_tol=zero_tol,
    )


# ----------------------------------------------------------------------
# Fifth-order identity in R^5
# ----------------------------------------------------------------------

def _f5_terms(laplacian: float, determinant: float, coefficients) -> np.ndarray:
    a5, a3, a1, ad = coefficients
    return np.array([a5 * laplacian ** 5, a3 * laplacian ** 3, a1 * laplacian, ad * determinant])


def _normalized_sum(terms: np.ndarray) -> float:
    top = float(np.max(np.abs(terms)))
    return 0.0 if top == 0.0 else abs(float(np.sum(terms))) / top


def f5_residual(r: RayFunction, x, scale_s: float = None, coefficients: str = "derived") -> float:
    """F(D^2 w) normalized by its largest term, for w scaled by scale_s"""
    if r.u.dim != 5 or r.alpha != 1.0:
        raise ValueError("the fifth-order identity is stated for dim 5 and alpha 1")
    ray = r if scale_s is None else r.with_scale(scale_s)
    H = ray.hessian(x)
    return _normalized_sum(_f5_terms(float(np.trace(H)), float(np.linalg.det(H)), F5_COEFFICIENTS[coefficients]))


@dataclass
class F5SearchReport:
    coefficients: str
    s_star: Optional[float]
    residual: float
    candidates: List[float]
    trace: List[Tuple[float, float]]
    n_points: int
    tol: float

    @property
    def found(self) -> bool:
        return self.s_star is not None

    def to_dict(self) -> Dict:
        return {
            "coefficients": self.coefficients,
            "found": self.found,
            "s_star": self.s_star,
            "residual": self.residual,
            "candidates": self.candidates,
            "n_points": self.n_points,
            "tol": self.tol,
            "trace": [{"s": s, "residual": res} for s, res in self.trace],
        }


def f5_scale_search(
    r: RayFunction,
    n_points: int = 100,
    seed: int = 0,
    coefficients: str = "derived",
    tol: float = 1e-6,
    grid_points: int = 61,
) -> F5SearchReport:
    """Search s in +-[1e-3, 1e3] so that F(D^2 (s w)) vanishes at seeded points

    At a fixed point F(s) = s (A s^4 + B s^2 + C), so the candidate s^2 are the
    roots of a quadratic taken at the probe with the largest |Lap w|.
    """
    if r.u.dim != 5 or r.alpha != 1.0:
        raise ValueError("the fifth-order identity is stated for dim 5 and alpha 1")
    coeffs = F5_COEFFICIENTS[coefficients]
    base = r.with_scale(1.0)
    X = sphere_points(5, n_points, seed, 0)
    H = base.hessian_batch(X)
    lap = np.trace(H, axis1=1, axis2=2)
    det = np.linalg.det(H)

    def worst(s: float) -> float:
        return max(_normalized_sum(_f5_terms(s * lp, s ** 5 * dt, coeffs)) for lp, dt in zip(lap, det))

    magnitudes = np.geomspace(1e-3, 1e3, grid_points)
    trace = [(float(sign * m), worst(sign * m)) for sign in (1.0, -1.0) for m in magnitudes]

    probe = int(np.argmax(np.abs(lap)))
    a5, a3, a1, ad = coeffs
    A = a5 * lap[probe] ** 5 + ad * det[probe]
    B = a3 * lap[probe] ** 3
    C = a1 * lap[probe]
    roots = np.roots([A, B, C]) if A != 0.0 else np.array([-C / B]) if B != 0.0 else np.array([])
    candidates = []
    for q in roots:
        if abs(q.imag) <= 1e-12 * max(1.0, abs(q.real)) and q.real > 0.0:
            s = math.sqrt(q.real)
            candidates.extend([s, -s])
    refined = [(s, worst(s)) for s in candidates]
    trace.extend(refined)

    best_s, best_res = min(trace, key=lambda item: item[1])
    s_star = best_s if best_res <= tol else None
    if s_star is None:
        logger.info(f"no scale satisfies the {coefficients} identity (best residual {best_res:.3e})")
    return F5SearchReport(
        coefficients=coefficients,
        s_star=s_star,
        residual=best_res,
        candidates=[float(s) for s in candidates],
        trace=trace,
        n_points=n_points,
        tol=tol,
    )


# ----------------------------------------------------------------------
# Hsiang trace system
# ----------------------------------------------------------------------

@dataclass
class HsiangFit:
    c1: float
    c2: float
    harmonicity: float
    c1_residual: float
    c2_residual: float
    n_samples: int

    def passed(self, tol: float = 1e-9) -> bool:
        return self.harmonicity <= tol and self.c1_residual <= tol and self.c2_residual <= tol

    def to_dict(self) -> Dict:
        return {
            "C1": self.c1,
            "C2": self.c2,
            "harmonicity": self.harmonicity,
            "c1_residual": self.c1_residual,
            "c2_residual": self.c2_residual,
            "n_samples": self.n_samples,
        }


def hsiang_fit(u: CubicForm, n_samples: int = 1000, seed: int = 0) -> HsiangFit:
    """Fit tr L_x^2 = C1 |x|^2 and tr L_x^3 = C2 u(x) and report residuals"""
    X = sphere_points(u.dim, n_samples, seed, 0)
    L = u.mult_operator_batch(X)
    L2 = L @ L
    tr2 = np.trace(L2, axis1=1, axis2=2)
    tr3 = np.einsum("nij,nji->n", L2, L)
    values = u.evaluate_batch(X)
    frob = np.linalg.norm(L, axis=(1, 2))

    if np.max(tr2) <= 0.0:
        raise DegenerateProbeError("the form vanishes identically")
    probe2 = int(np.argmax(np.abs(values)))
    if abs(values[probe2]) <= 1e-12 * max(u.tensor_norm, 1.0):
        raise DegenerateProbeError("u vanishes at every sampled point")

    c1 = float(tr2[0])
    c2 = float(tr3[probe2] / values[probe2])
    c1_res = np.abs(tr2 - c1) / tr2
    c2_res = np.abs(tr3 - c2 * values) / np.maximum(frob ** 3, 1e-300)
    harmonicity = float(np.max(np.abs(u.basis_traces()))) / max(u.tensor_norm, 1.0)

    return HsiangFit(
        c1=c1,
        c2=c2,
        harmonicity=harmonicity,
        c1_residual=float(c1_res.max()),
        c2_residual=float(c2_res.max()),
        n_samples=n_samples,
    )
