"""
CubicLab API - high-level entry points combining the library modules

Each command returns a CommandResult whose `results` dict is what the
command line tool serializes.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from cubiclab_api.cubic_form import CubicForm
from cubiclab_api.errors import CubicLabError
from cubiclab_api.form_catalog import list_catalog, normalize_munzner, resolve_selector
from cubiclab_api.gallery import MazyaParams, hopf_map, lawson_osserman, lawson_osserman_prefactor, mazya_exponent
from cubiclab_api.hessian_w import (
    RayFunction,
    charpoly_check,
    default_charpoly_grid,
    f5_residual,
    f5_scale_search,
    gap_scan,
    hsiang_fit,
    idempotent_spectrum,
)
from cubiclab_api.hyperbolicity import REFINE_MIN_STEP, RefineSettings, hyperbolic_set_estimate
from cubiclab_api.idempotent_engine import EXTREMAL_SLACK, genericity_report, newton_search, variational_search
from cubiclab_api.peirce_lab import (
    LAW_MATCH_TOL,
    clifford_check,
    dimension_check,
    eiconal_residuals,
    eiconal_scaled,
    fusion_table,
    munzner_residuals,
    peirce_decompose,
)
from cubiclab_utils.config import ConfigManager
from cubiclab_utils.logger import get_logger, log_performance
from cubiclab_utils.sampling import sphere_points

logger = get_logger(__name__)

VERIFY_CHECKS = ("munzner", "eiconal", "harmonic", "fusion", "clifford", "dimension")
HARMONIC_TOL = 1e-12


@dataclass
class CommandResult:
    """Outcome of one lab command"""

    results: Dict
    passed: bool = True
    parameters: Dict = field(default_factory=dict)
    samples: Optional[Dict[str, np.ndarray]] = None


class CubicLab:
    """Facade over the numerical library"""

    def __init__(self, config: Optional[ConfigManager] = None):
        self.config = config or ConfigManager()

    # ------------------------------------------------------------------
    # Forms
    # ------------------------------------------------------------------

    def catalog(self) -> CommandResult:
        return CommandResult({"forms": [entry.to_dict() for entry in list_catalog()]})

    def load_form(self, selector: str, normalize: bool = False) -> Tuple[CubicForm, Dict]:
        """Resolve a selector, optionally rescaling to |grad u|^2 = 9|x|^4"""
        u = resolve_selector(selector)
        info = {"selector": selector, "dim": u.dim, "terms": len(u.coeffs)}
        if normalize:
            u, kappa = normalize_munzner(u, tol=self.config["munzner_tol"], seed=self.config["seed"])
            info["kappa"] = kappa
            info["normalized"] = True
        return u, info

    def _params(self, *keys: str, normalize: bool = False, **extra) -> Dict:
        """Config values echoed into a report; munzner_tol joins whenever a form was normalized"""
        params = {key: self.config[key] for key in keys}
        params["normalize"] = normalize
        if normalize:
            params["munzner_tol"] = self.config["munzner_tol"]
        params.update(extra)
        return params

    def _newton(self, u: CubicForm, workers: int = 1, progress: bool = False):
        cfg = self.config
        return newton_search(u, n_starts=cfg["n_starts"], seed=cfg["seed"], tol=cfg["newton_tol"],
                             max_iter=cfg["max_iter"], workers=workers, progress=progress)

    def _decompose(self, u: CubicForm, c):
        cfg = self.config
        return peirce_decompose(u, c, idempotent_tol=cfg["idempotent_tol"], cluster_rtol=cfg["cluster_rtol"])

    def _scaled(self, u: CubicForm, scaling: str) -> CubicForm:
        return eiconal_scaled(u) if scaling == "eiconal" else u

    # ------------------------------------------------------------------
    # analyze
    # ------------------------------------------------------------------

    @log_performance
    def analyze(self, selector: str, scaling: str = "raw", normalize: bool = False,
                profile: Optional[str] = None, workers: int = 1, progress: bool = False) -> CommandResult:
        cfg = self.config
        if scaling not in ("raw", "eiconal"):
            raise ValueError(f"scaling must be 'raw' or 'eiconal', got {scaling!r}")
        # the eiconal product is only defined for a Munzner-normalized form
        normalize = normalize or scaling == "eiconal"
        u, info = self.load_form(selector, normalize)
        v = self._scaled(u, scaling)
        seed = cfg["seed"]
        profile = profile or ("eiconal" if scaling == "eiconal" else "free")

        records = self._newton(v, workers, progress)
        variational = []
        if not v.is_zero:
            x0 = sphere_points(v.dim, 1, seed, 99)[0]
            try:
                variational.append(variational_search(v, x0, tol=cfg["newton_tol"], ascent_tol=cfg["ascent_tol"]))
            except CubicLabError as e:
                logger.warning(f"variational search failed: {e}")

        genericity = genericity_report(v, list(records), tol=cfg["genericity_tol"])
        peirce = []
        passed = True
        for record in list(records) + [r for r in variational if not r.square_zero_witness]:
            decomp = self._decompose(v, record.c)
            fusion = fusion_table(v, decomp, profile, n_samples=cfg["fusion_samples"], seed=seed, tol=cfg["fusion_tol"])
            passed = passed and (profile == "free" or fusion.passed)
            peirce.append({"decomposition": decomp.to_dict(), "fusion": fusion.to_dict()})

        results = {
            "form": info,
            "scaling": scaling,
            "profile": profile,
            "idempotents": [r.to_dict() for r in records],
            "dropped_starts": records.n_dropped,
            "variational": [r.to_dict() for r in variational],
            "genericity": genericity.to_dict(),
            "peirce": peirce,
        }
        params = self._params(
            "seed", "n_starts", "newton_tol", "max_iter", "ascent_tol", "genericity_tol",
            "idempotent_tol", "cluster_rtol", "fusion_samples", "fusion_tol",
            normalize=normalize, scaling=scaling, profile=profile,
            extremal_slack=EXTREMAL_SLACK, law_match_tol=LAW_MATCH_TOL,
        )
        return CommandResult(results, passed, params)

    # ------------------------------------------------------------------
    # verify
    # ------------------------------------------------------------------

    @log_performance
    def verify(self, selector: str, checks: Sequence[str], normalize: bool = False) -> CommandResult:
        cfg = self.config
        unknown = [c for c in checks if c not in VERIFY_CHECKS]
        if unknown:
            raise ValueError(f"unknown checks: {', '.join(unknown)}")

        u, info = self.load_form(selector, normalize)
        seed = cfg["seed"]
        tol = cfg["residual_tol"]
        outcome: Dict[str, Dict] = {}

        munzner = munzner_residuals(u, n_samples=cfg["residual_samples"], seed=seed)
        harmonic = munzner.residuals["harmonicity"] <= HARMONIC_TOL

        if "munzner" in checks:
            outcome["munzner"] = {**munzner.to_dict(), "passed": munzner.residuals["munzner"] <= tol}
        if "harmonic" in checks:
            outcome["harmonic"] = {"basis_trace_max": munzner.residuals["harmonicity"], "passed": harmonic}
        if "eiconal" in checks:
            summary = eiconal_residuals(u, "eiconal", n_samples=cfg["residual_samples"], seed=seed)
            keys = ["norm", "cube", "operator", "trilinear", "near_jordan"]
            outcome["eiconal"] = {**summary.to_dict(), "passed": summary.passed(tol, keys)}

        peirce_checks = [c for c in checks if c in ("fusion", "clifford", "dimension")]
        if peirce_checks:
            outcome.update(self._peirce_checks(u, checks, harmonic))

        passed = all(entry["passed"] for entry in outcome.values())
        keys = ["seed", "residual_samples", "residual_tol"]
        extra = {}
        if peirce_checks:
            keys += ["n_starts", "newton_tol", "max_iter", "idempotent_tol", "cluster_rtol", "fusion_samples", "fusion_tol"]
            extra["law_match_tol"] = LAW_MATCH_TOL
        params = self._params(*keys, normalize=normalize, checks=list(checks), harmonic_tol=HARMONIC_TOL, **extra)
        return CommandResult({"form": info, "checks": outcome}, passed, params)

    def _peirce_checks(self, u: CubicForm, checks: Sequence[str], harmonic: bool) -> Dict[str, Dict]:
        cfg = self.config
        v = eiconal_scaled(u)
        records = list(self._newton(v))
        outcome: Dict[str, Dict] = {}
        if not records:
            for check in ("fusion", "clifford", "dimension"):
                if check in checks:
                    outcome[check] = {"passed": False, "error": "no idempotent found"}
            return outcome

        decomp = self._decompose(v, records[0].c)
        if "fusion" in checks:
            fusion = fusion_table(v, decomp, "eiconal", n_samples=cfg["fusion_samples"], seed=cfg["seed"], tol=cfg["fusion_tol"])
            outcome["fusion"] = fusion.to_dict()
        if "clifford" in checks:
            try:
                cl = clifford_check(v, decomp, n_samples=cfg["fusion_samples"], seed=cfg["seed"])
                cl["passed"] = bool(
                    cl["clifford_residual"] <= cfg["residual_tol"]
                    and cl["lccc_residual"] <= cfg["residual_tol"]
                    and cl["half_dimension_even"]
                )
            except CubicLabError as e:
                cl = {"passed": False, "error": str(e)}
            outcome["clifford"] = cl
        if "dimension" in checks:
            try:
                outcome["dimension"] = dimension_check(decomp, harmonic)
            except CubicLabError as e:
                outcome["dimension"] = {"passed": False, "error": str(e)}
        outcome.setdefault("idempotent", {"c": records[0].c.tolist(), "spectrum": records[0].spectrum.tolist(), "passed": True})
        return outcome

    # ------------------------------------------------------------------
    # Hessian side
    # ------------------------------------------------------------------

    @log_performance
    def hyperbolicity(self, selector: str, alpha: float, pairs: int, orbit: bool, zero_tol: float,
                      normalize: bool = False, workers: int = 1, progress: bool = False) -> CommandResult:
        cfg = self.config
        u, info = self.load_form(selector, normalize)
        r = RayFunction(u, alpha=alpha)
        anchors = [rec.c for rec in self._newton(u)]
        settings = RefineSettings(starts=cfg["refine_starts"], sweeps=cfg["refine_sweeps"], step=cfg["refine_step"])
        report = hyperbolic_set_estimate(
            r, n_pairs=pairs, seed=cfg["seed"], orbit=orbit, zero_tol=zero_tol,
            anchors=anchors, chunk_size=cfg["chunk_size"], workers=workers, progress=progress,
            refine_settings=settings,
        )

        spectra = []
        if alpha == 1.0:
            for c in anchors:
                spec = idempotent_spectrum(r, c)
                grid = default_charpoly_grid(float(np.linalg.norm(c)), cfg["charpoly_points"])
                check = charpoly_check(r, c, grid=grid, generic=False)
                spectra.append({**spec.to_dict(), "charpoly": check})

        params = self._params(
            "seed", "chunk_size", "n_starts", "newton_tol", "max_iter", "charpoly_points",
            "refine_starts", "refine_sweeps", "refine_step",
            normalize=normalize, alpha=alpha, pairs=pairs, orbit=orbit, zero_tol=zero_tol,
            refine_min_step=REFINE_MIN_STEP,
        )
        results = {"form": info, "hyperbolicity": report.to_dict(), "idempotent_spectra": spectra}
        return CommandResult(results, report.hyperbolic_evidence, params, samples=report.samples())

    @log_performance
    def gap_scan(self, selector: str, dirs: int, delta: float, normalize: bool = False) -> CommandResult:
        """Passes when every extremal idempotent direction found reaches gap ratio 2"""
        cfg = self.config
        u, info = self.load_form(selector, normalize)
        records = self._newton(u)
        report = gap_scan(u, n_dirs=dirs, seed=cfg["seed"], delta=delta, idempotents=records, zero_tol=cfg["gap_zero_tol"])
        passed = report.idempotent_bound_holds(cfg["gap_tol"])
        results = {"form": info, "gap_scan": {**report.to_dict(), "idempotent_bound_holds": passed}}
        params = self._params("seed", "n_starts", "newton_tol", "max_iter", "gap_zero_tol", "gap_tol",
                              normalize=normalize, dirs=dirs, delta=delta)
        return CommandResult(results, passed, params)

    @log_performance
    def f5(self, selector: str, points: int, scale_search: bool = True, coefficients: str = "derived",
           scale: float = 1.0 / 6.0) -> CommandResult:
        cfg = self.config
        u, info = self.load_form(selector, normalize=True)
        r = RayFunction(u, alpha=1.0)
        params = self._params("seed", normalize=True, points=points, coefficients=coefficients,
                              tol=cfg["f5_tol"], scale_search=scale_search)
        if scale_search:
            report = f5_scale_search(r, n_points=points, seed=cfg["seed"], coefficients=coefficients, tol=cfg["f5_tol"])
            samples = {"s": np.array([s for s, _ in report.trace]),
                       "residual": np.array([res for _, res in report.trace])}
            return CommandResult({"form": info, "f5": report.to_dict()}, report.found, params, samples)

        X = sphere_points(u.dim, points, cfg["seed"], 0)
        residuals = np.array([f5_residual(r, x, scale, coefficients) for x in X])
        params["scale"] = scale
        results = {"form": info, "f5": {"scale": scale, "max_residual": float(residuals.max())}}
        return CommandResult(results, bool(residuals.max() <= cfg["f5_tol"]), params, {"residual": residuals})

    @log_performance
    def hsiang(self, selector: str, normalize: bool = False) -> CommandResult:
        cfg = self.config
        u, info = self.load_form(selector, normalize)
        fit = hsiang_fit(u, n_samples=cfg["residual_samples"], seed=cfg["seed"])
        params = self._params("seed", "residual_samples", "residual_tol", normalize=normalize)
        return CommandResult({"form": info, "hsiang": fit.to_dict()}, fit.passed(cfg["residual_tol"]), params)

    # ------------------------------------------------------------------
    # Gallery
    # ------------------------------------------------------------------

    def mazya(self, params: MazyaParams) -> CommandResult:
        exponent = mazya_exponent(params)
        results = {"params": params.to_dict(), "exponent": exponent, "strongly_elliptic": params.strongly_elliptic}
        return CommandResult(results, True, params.to_dict())

    def lawson_osserman(self, d: int, points: int) -> CommandResult:
        cfg = self.config
        X = sphere_points(2 * d, points, cfg["seed"], 0)
        radii = np.linspace(0.5, 2.0, points)[:, None]
        X = X * radii
        eta = hopf_map(X, d)
        norm_res = np.abs(np.linalg.norm(eta, axis=1) - np.sum(X * X, axis=1)) / np.sum(X * X, axis=1)
        W = lawson_osserman(X, d)
        homogeneity = np.max(np.abs(lawson_osserman(3.0 * X, d) - 3.0 * W))
        passed = bool(norm_res.max() <= 1e-12 and homogeneity <= 1e-12 * max(1.0, np.abs(W).max()))
        results = {
            "d": d,
            "prefactor": lawson_osserman_prefactor(d),
            "hopf_norm_residual": float(norm_res.max()),
            "homogeneity_residual": float(homogeneity),
        }
        return CommandResult(results, passed, {"seed": cfg["seed"], "d": d, "points": points})
