"""
Délégation à perte quadratique avec deux principaux.

V = -(t - o1 - o2)^2 pour l'agent, u_i = -r_i(t)(o_i - o_i*(t))^2 pour le
principal i. Le module vérifie, sur une grille de types, les conditions des
régimes fermés (délégation totale, absence de compromis, absence de
compromis des deux côtés, régimes par morceaux), construit le profil de
menus correspondant et le confronte au solveur fini.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field
from scipy.integrate import cumulative_trapezoid

from app.config import DEFAULT_SETTINGS, Settings
from app.distribution import DensityDoc, Distribution
from app.errors import GameInputError, NumericalError, PreconditionError
from app.game_model import GameModelAgent, MenuProfile
from app.log import get_logger
from app.serialization import load_document
from app.workers import parallel_map

logger = get_logger(__name__)

SCENARIOS = ("full_delegation", "no_compromise", "both_no_compromise", "piecewise")


# ============================================
# Documents (JSON)
# ============================================

class _Doc(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class AffinePiece(_Doc):
    start: Optional[float] = None
    intercept: float = 0.0
    slope: float = 0.0


class FunctionDoc(_Doc):
    """Fonction affine par morceaux, continue à droite."""

    pieces: List[AffinePiece] = Field(min_length=1)


FunctionLike = Union[float, FunctionDoc]


class DelegationPrincipalDoc(_Doc):
    weight: FunctionLike = 1.0
    ideal: FunctionLike
    outcomes: Tuple[float, float]


class DelegationModelDoc(_Doc):
    name: Optional[str] = None
    t_low: float
    t_high: float
    density: DensityDoc = DensityDoc()
    principals: List[DelegationPrincipalDoc] = Field(min_length=2, max_length=2)
    grid: int = Field(default=1001, ge=5)


class RegimeSpec(_Doc):
    scenario: Literal["full_delegation", "no_compromise", "both_no_compromise", "piecewise"]
    principal: Literal[1, 2] = 1
    cutpoints: List[float] = Field(default_factory=list)
    levels: List[float] = Field(default_factory=list)

    @property
    def K(self) -> int:
        return len(self.cutpoints)


def _evaluate(fn: FunctionLike, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if isinstance(fn, (int, float)):
        return np.full_like(t, float(fn))
    starts = np.array([-np.inf if p.start is None else p.start for p in fn.pieces])
    idx = np.clip(np.searchsorted(starts, t, side="right") - 1, 0, None)
    intercept = np.array([p.intercept for p in fn.pieces])[idx]
    slope = np.array([p.slope for p in fn.pieces])[idx]
    return intercept + slope * t


# ============================================
# Modèle
# ============================================

@dataclass(frozen=True)
class DelegationModel:
    doc: DelegationModelDoc

    @property
    def t_low(self) -> float:
        return self.doc.t_low

    @property
    def t_high(self) -> float:
        return self.doc.t_high

    @property
    def distribution(self) -> Distribution:
        return Distribution(self.doc.density, self.t_low, self.t_high)

    @property
    def analytic(self) -> bool:
        return self.distribution.analytic

    def f(self, t) -> np.ndarray:
        return self.distribution.f(t)

    def F(self, t) -> np.ndarray:
        return self.distribution.F(t)

    def r(self, i: int, t) -> np.ndarray:
        return _evaluate(self.doc.principals[i].weight, t)

    def ideal(self, i: int, t) -> np.ndarray:
        return _evaluate(self.doc.principals[i].ideal, t)

    def outcome_range(self, i: int) -> Tuple[float, float]:
        return self.doc.principals[i].outcomes

    def grid(self, extra: Sequence[float] = ()) -> np.ndarray:
        base = np.linspace(self.t_low, self.t_high, self.doc.grid)
        return np.union1d(base, np.asarray(list(extra), dtype=float))

    def kappa(self, rival: int, grid: np.ndarray) -> float:
        return float(self.r(rival, grid).min() / 2)


# ============================================
# Rapports
# ============================================

@dataclass
class ConditionCheck:
    name: str
    passed: bool
    margin: float
    details: Dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"passed": bool(self.passed), "margin": float(self.margin), "details": self.details}


@dataclass
class ConditionReport:
    scenario: str
    principal: int
    passed: bool
    conditions: Dict[str, ConditionCheck]
    grid: np.ndarray
    multiplier: Optional[np.ndarray]
    tolerance: float
    kappa: Optional[float] = None

    def failures(self) -> List[str]:
        return [name for name, c in self.conditions.items() if not c.passed]

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({"t": self.grid})
        if self.multiplier is not None:
            frame["multiplier"] = self.multiplier
        return frame

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "principal": self.principal,
            "status": "pass" if self.passed else "fail",
            "tolerance": self.tolerance,
            "kappa": self.kappa,
            "conditions": {name: c.to_dict() for name, c in self.conditions.items()},
            "grid_points": int(len(self.grid)),
        }


@dataclass
class DelegationProfile:
    scenario: str
    menus: List[Dict]
    grid: np.ndarray
    allocation: np.ndarray  # colonnes (o1, o2) par point de grille
    bliss_residual: float

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.grid, "o1": self.allocation[:, 0], "o2": self.allocation[:, 1]})

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "menus": self.menus,
            "bliss_residual": float(self.bliss_residual),
            "grid_points": int(len(self.grid)),
        }


@dataclass
class CrossValidation:
    n_types: int
    n_outcomes: int
    outcome_step: float
    found: bool
    upr_passed: Optional[bool]
    sup_distance: Optional[float]
    rows: List[Dict] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows)

    def to_dict(self) -> dict:
        return {
            "n_types": self.n_types,
            "n_outcomes": self.n_outcomes,
            "outcome_step": self.outcome_step,
            "found": self.found,
            "upr_passed": self.upr_passed,
            "sup_distance": self.sup_distance,
            "within_one_step": None if self.sup_distance is None else self.sup_distance <= self.outcome_step + 1e-12,
            "rows": self.rows,
        }


@dataclass
class SlackProfile:
    grid: np.ndarray
    slack: np.ndarray

    @property
    def max_abs(self) -> float:
        return float(np.abs(self.slack).max())

    def to_dict(self) -> dict:
        worst = int(np.abs(self.slack).argmax())
        return {"max_abs": self.max_abs, "worst_t": float(self.grid[worst]), "grid_points": int(len(self.grid))}


# ============================================
# Régimes
# ============================================

@dataclass(frozen=True)
class _Regime:
    """Le principal `offer` propose des niveaux finis; le rival délègue par segment."""

    offer: int
    cuts: Tuple[float, ...]
    levels: Tuple[float, ...]

    @property
    def rival(self) -> int:
        return 1 - self.offer

    def bounds(self, model: DelegationModel) -> List[float]:
        return [model.t_low, *self.cuts, model.t_high]


def _multiplier(model: DelegationModel, regime: _Regime, kappa: float, level: float, t) -> np.ndarray:
    j = regime.rival
    return kappa * model.F(t) + 2 * model.r(j, t) * (t - level - model.ideal(j, t)) * model.f(t)


def _segment_worker(model: DelegationModel, regime: _Regime, kappa: float, grid: np.ndarray, x: int) -> Dict:
    bounds = regime.bounds(model)
    points = grid[(grid >= bounds[x]) & (grid < bounds[x + 1])]
    if len(points) < 3:
        raise NumericalError(
            f"grille trop grossière: {len(points)} point(s) sur le segment [{bounds[x]}, {bounds[x + 1]})"
        )
    lam = _multiplier(model, regime, kappa, regime.levels[x], points)
    steps = np.diff(lam)
    worst = int(steps.argmin())
    return {"segment": x + 1, "from": bounds[x], "to": bounds[x + 1],
            "margin": float(steps[worst]), "worst_t": float(points[worst + 1]), "points": int(len(points))}


def project_to_menu(points: Sequence[float], x):
    """
    Projection au plus proche sur un menu fini (égalité: le plus petit élément).

    Args:
        points: éléments du menu
        x: scalaire ou tableau de cibles

    Returns:
        élément(s) du menu le(s) plus proche(s)
    """
    menu = np.unique(np.asarray(points, dtype=float))
    if menu.size == 0:
        raise GameInputError("menu vide")
    target = np.asarray(x, dtype=float)
    idx = np.searchsorted(menu, target, side="left")
    hi = menu[np.clip(idx, 0, menu.size - 1)]
    lo = menu[np.clip(idx - 1, 0, menu.size - 1)]
    chosen = np.where(np.abs(hi - target) < np.abs(target - lo), hi, lo)
    return float(chosen) if chosen.ndim == 0 else chosen


class DelegationAgent:
    def __init__(self, settings: Settings = DEFAULT_SETTINGS):
        """Agent de vérification des régimes de délégation (pertes quadratiques)."""
        self.settings = settings

    # ============================================
    # Chargement
    # ============================================

    def load_model(self, document: Union[str, bytes, dict, Path]) -> DelegationModel:
        """
        Charge et valide un modèle de délégation.

        Args:
            document: texte JSON, dict ou chemin

        Returns:
            DelegationModel
        """
        doc = load_document(DelegationModelDoc, document)
        for k, p in enumerate(doc.principals):
            lo, hi = p.outcomes
            if lo > hi:
                raise GameInputError(f"O_{k + 1} vide: [{lo}, {hi}]")
            for fn in (p.weight, p.ideal):
                if isinstance(fn, FunctionDoc):
                    starts = [q.start for q in fn.pieces[1:]]
                    if any(s is None for s in starts) or starts != sorted(starts):
                        raise GameInputError("morceaux non ordonnés (start croissant requis)")
        model = DelegationModel(doc)
        grid = model.grid()
        model.distribution.validate(doc.grid, self.tolerance(model))
        for k in range(2):
            if np.any(model.r(k, grid) <= 0):
                raise GameInputError(f"poids r_{k + 1} non strictement positif")
        logger.debug(f"✓ Modèle de délégation chargé ({doc.density.preset}, {len(grid)} points)")
        return model

    def load_spec(self, document: Union[str, bytes, dict, Path]) -> RegimeSpec:
        return load_document(RegimeSpec, document)

    def tolerance(self, model: DelegationModel) -> float:
        return self.settings.tol_analytic if model.analytic else self.settings.tol_sampled

    def _regime(self, model: DelegationModel, spec: RegimeSpec) -> _Regime:
        i = spec.principal - 1
        if spec.scenario == "full_delegation":
            return _Regime(i, (), (float(model.ideal(i, model.t_low)),))
        if len(spec.levels) != spec.K + 1:
            raise GameInputError(f"{spec.K} coupure(s) exigent {spec.K + 1} niveaux")
        cuts = [model.t_low, *spec.cutpoints, model.t_high]
        if any(a >= b for a, b in zip(cuts, cuts[1:])):
            raise GameInputError("coupures strictement croissantes dans (t_low, t_high) requises")
        lo, hi = model.outcome_range(i)
        for level in spec.levels:
            if not lo <= level <= hi:
                raise GameInputError(f"niveau {level} hors de O_{i + 1} = [{lo}, {hi}]")
        return _Regime(i, tuple(spec.cutpoints), tuple(spec.levels))

    # ============================================
    # Vérification des conditions
    # ============================================

    def check_regime(self, model: DelegationModel, spec: RegimeSpec) -> ConditionReport:
        """
        Vérifie sur la grille les conditions suffisantes du régime demandé.

        Args:
            model: modèle de délégation
            spec: régime (full_delegation, no_compromise, both_no_compromise, piecewise)

        Returns:
            ConditionReport (marges par condition, multiplicateur échantillonné)
        """
        if spec.scenario in ("full_delegation", "piecewise"):
            report = self._check_segments(model, spec, self._regime(model, spec))
        elif spec.scenario == "no_compromise":
            report = self._check_no_compromise(model, spec)
        else:
            report = self._check_both(model, spec)
        if report.passed:
            logger.info(f"✓ Régime {spec.scenario}: conditions satisfaites")
        else:
            logger.info(f"✗ Régime {spec.scenario}: échec ({', '.join(report.failures())})")
        return report

    def _check_segments(self, model: DelegationModel, spec: RegimeSpec, regime: _Regime) -> ConditionReport:
        tol = self.tolerance(model)
        i, j = regime.offer, regime.rival
        bounds = regime.bounds(model)
        grid = model.grid(regime.cuts)
        kappa = model.kappa(j, grid)
        lo_i, hi_i = model.outcome_range(i)
        lo_j, hi_j = model.outcome_range(j)
        for level in regime.levels:
            if not lo_i <= level <= hi_i:
                raise GameInputError(f"niveau {level} hors de O_{i + 1}")

        n_seg = len(regime.levels)
        segments = parallel_map(partial(_segment_worker, model, regime, kappa, grid), range(n_seg), self.settings.jobs)
        conditions: Dict[str, ConditionCheck] = {}

        # o_i*(t) = niveau du segment, segment fermé à droite pour le dernier
        align, feas = [], []
        for x in range(n_seg):
            last = x == n_seg - 1
            mask = (grid >= bounds[x]) & ((grid <= bounds[x + 1]) if last else (grid < bounds[x + 1]))
            points = grid[mask]
            align.append(float(np.abs(model.ideal(i, points) - regime.levels[x]).max()))
            rest = points - regime.levels[x]
            feas.append(float(min((rest - lo_j).min(), (hi_j - rest).min())))
        conditions["ideal_alignment"] = ConditionCheck("ideal_alignment", max(align) <= tol, -max(align),
                                                       {"per_segment": align})
        conditions["feasibility"] = ConditionCheck("feasibility", min(feas) >= -tol, min(feas), {"per_segment": feas})

        mono = min(s["margin"] for s in segments)
        conditions["monotonicity"] = ConditionCheck("monotonicity", mono >= -tol, mono, {"segments": segments})

        jumps = []
        for x, cut in enumerate(regime.cuts):
            left_pts = grid[grid < cut][-2:]
            lam_left = _multiplier(model, regime, kappa, regime.levels[x], left_pts)
            # extrapolation linéaire unilatérale vers la coupure
            left = lam_left[-1] + (lam_left[-1] - lam_left[0]) * (cut - left_pts[-1]) / (left_pts[-1] - left_pts[0])
            right = float(_multiplier(model, regime, kappa, regime.levels[x + 1], np.array([cut]))[0])
            jumps.append({"cut": cut, "left_limit": float(left), "right_value": right, "margin": float(right - left)})
        jump_margin = min((j_["margin"] for j_ in jumps), default=0.0)
        conditions["jumps"] = ConditionCheck("jumps", jump_margin >= -tol, jump_margin, {"cuts": jumps})

        t_lo, t_hi = model.t_low, model.t_high
        low = float(t_lo - regime.levels[0] - model.ideal(j, t_lo))
        high = float(t_hi - regime.levels[-1] - model.ideal(j, t_hi))
        conditions["boundary_low"] = ConditionCheck("boundary_low", abs(low) <= tol, -abs(low), {"residual": low})
        conditions["boundary_high"] = ConditionCheck("boundary_high", high <= tol, -high, {"value": high})

        multiplier = self._assembled_multiplier(model, regime, kappa, grid)
        steps = np.diff(multiplier)
        global_margin = float(steps.min())
        conditions["assembled_multiplier"] = ConditionCheck(
            "assembled_multiplier", global_margin >= -tol, global_margin,
            {"worst_t": float(grid[int(steps.argmin()) + 1])},
        )
        passed = all(c.passed for c in conditions.values())
        return ConditionReport(spec.scenario, i + 1, passed, conditions, grid, multiplier, tol, kappa)

    def _assembled_multiplier(self, model: DelegationModel, regime: _Regime, kappa: float, grid: np.ndarray) -> np.ndarray:
        bounds = regime.bounds(model)
        idx = np.clip(np.searchsorted(np.asarray(bounds[1:-1]), grid, side="right"), 0, len(regime.levels) - 1)
        levels = np.asarray(regime.levels)[idx]
        lam = _multiplier(model, regime, kappa, levels, grid)
        lam[grid >= model.t_high] = kappa * model.F(model.t_high)
        return lam

    def _check_no_compromise(self, model: DelegationModel, spec: RegimeSpec) -> ConditionReport:
        tol = self.tolerance(model)
        i = spec.principal - 1
        j = 1 - i
        grid = model.grid()
        kappa = model.kappa(j, grid)
        c = float(model.ideal(i, model.t_low))
        drift = float(np.abs(model.ideal(i, grid) - c).max())
        conditions = {"ideal_alignment": ConditionCheck("ideal_alignment", drift <= tol, -drift, {"level": c})}
        conditions["feasibility"] = self._feasibility(model, {i: np.array([c]), j: model.ideal(j, grid)}, tol)

        g = model.ideal(j, grid)
        g0, t0 = g[0], model.t_low
        lhs = (grid - c) * g - g ** 2 / 2 + g0 ** 2 / 2 - (t0 - c) * g0
        rhs = cumulative_trapezoid(g, grid, initial=0.0)
        residual = lhs - rhs
        quad_error = self._quadrature_error(grid, g, rhs)
        worst = int(np.abs(residual).argmax())
        max_res = float(np.abs(residual).max())
        conditions["envelope_identity"] = ConditionCheck(
            "envelope_identity", max_res <= tol + quad_error, -max_res,
            {"max_residual": max_res, "quadrature_error": quad_error, "worst_t": float(grid[worst])},
        )
        passed = all(cond.passed for cond in conditions.values())
        return ConditionReport(spec.scenario, i + 1, passed, conditions, grid, kappa * model.F(grid), tol, kappa)

    def _check_both(self, model: DelegationModel, spec: RegimeSpec) -> ConditionReport:
        tol = self.tolerance(model)
        grid = model.grid()
        o1, o2 = model.ideal(0, grid), model.ideal(1, grid)
        conditions = {"feasibility": self._feasibility(model, {0: o1, 1: o2}, tol)}
        gap = np.abs(grid - o1 - o2)
        conditions["bliss_identity"] = ConditionCheck(
            "bliss_identity", float(gap.max()) <= tol, -float(gap.max()), {"worst_t": float(grid[int(gap.argmax())])}
        )
        passed = all(cond.passed for cond in conditions.values())
        return ConditionReport(spec.scenario, spec.principal, passed, conditions, grid, None, tol)

    def _feasibility(self, model: DelegationModel, values: Dict[int, np.ndarray], tol: float) -> ConditionCheck:
        margins = {}
        for k, v in values.items():
            lo, hi = model.outcome_range(k)
            margins[f"O{k + 1}"] = float(min((v - lo).min(), (hi - v).min()))
        margin = min(margins.values())
        return ConditionCheck("feasibility", margin >= -tol, margin, margins)

    def _quadrature_error(self, grid: np.ndarray, g: np.ndarray, fine: np.ndarray) -> float:
        """Estimation de Richardson: écart entre pas h et 2h, divisé par 3."""
        if len(grid) < 5:
            return 0.0
        coarse = cumulative_trapezoid(g[::2], grid[::2], initial=0.0)
        return float(np.abs(fine[::2] - coarse).max() / 3)

    # ============================================
    # Construction du profil
    # ============================================

    def build_delegation_profile(self, model: DelegationModel, spec: RegimeSpec,
                                 report: Optional[ConditionReport] = None) -> DelegationProfile:
        """
        Construit le profil de menus du régime certifié et l'allocation induite.

        Args:
            model: modèle
            spec: régime
            report: rapport de check_regime (recalculé si absent)

        Returns:
            DelegationProfile (menus symboliques + allocation échantillonnée)
        """
        report = report or self.check_regime(model, spec)
        if not report.passed or report.scenario != spec.scenario:
            raise PreconditionError(f"régime {spec.scenario} non certifié: construction impossible")

        if spec.scenario in ("full_delegation", "piecewise"):
            regime = self._regime(model, spec)
            grid = model.grid(regime.cuts)
            bounds = regime.bounds(model)
            idx = np.clip(np.searchsorted(np.asarray(bounds[1:-1]), grid, side="right"), 0, len(regime.levels) - 1)
            own = np.asarray(regime.levels)[idx]
            rival = grid - own
            pieces = []
            for x, level in enumerate(regime.levels):
                last = x == len(regime.levels) - 1
                pieces.append({"from": bounds[x], "to": bounds[x + 1], "closed": last, "menu": f"s - {level:g}"})
            menus = {regime.offer: {"principal": regime.offer + 1, "kind": "finite", "items": list(regime.levels)},
                     regime.rival: {"principal": regime.rival + 1, "kind": "intervals", "pieces": pieces}}
            alloc = {regime.offer: own, regime.rival: rival}
        elif spec.scenario == "no_compromise":
            i = spec.principal - 1
            j = 1 - i
            grid = model.grid()
            c = float(model.ideal(i, model.t_low))
            menus = {i: {"principal": i + 1, "kind": "finite", "items": [c]},
                     j: {"principal": j + 1, "kind": "curve", "menu": "o*(s)"}}
            alloc = {i: np.full_like(grid, c), j: model.ideal(j, grid)}
        else:
            grid = model.grid()
            menus = {k: {"principal": k + 1, "kind": "curve", "menu": "o*(s)"} for k in range(2)}
            alloc = {0: model.ideal(0, grid), 1: model.ideal(1, grid)}

        allocation = np.column_stack([alloc[0], alloc[1]])
        residual = float(np.abs(grid - allocation.sum(axis=1)).max())
        for k in range(2):
            sample = np.unique(np.round(alloc[k][:: max(1, len(grid) // 50)], 12))
            menus[k]["sample"] = sample.tolist()
        logger.info(f"✓ Profil {spec.scenario} construit (résidu de point idéal {residual:.2e})")
        return DelegationProfile(spec.scenario, [menus[0], menus[1]], grid, allocation, residual)

    def envelope_slack(self, model: DelegationModel, spec: RegimeSpec) -> SlackProfile:
        """
        Écart d'enveloppe Ξ(t) de l'allocation construite.

        Le principal qui propose un menu fini voit sa sélection recalculée par
        projection de t - o_rival(t) sur son menu.
        """
        profile = self.build_delegation_profile(model, spec)
        grid = profile.grid
        offer = 0 if spec.scenario == "both_no_compromise" else spec.principal - 1
        rival_alloc = profile.allocation[:, 1 - offer]
        menu = np.unique(profile.allocation[:, offer])
        selected = project_to_menu(menu, grid - rival_alloc)
        total = selected + rival_alloc
        psi = grid * total - total ** 2 / 2
        slack = psi - psi[0] - cumulative_trapezoid(total, grid, initial=0.0)
        result = SlackProfile(grid, slack)
        logger.debug(f"📊 max |Ξ| = {result.max_abs:.2e}")
        return result

    # ============================================
    # Validation croisée avec le solveur fini
    # ============================================

    def discretize(self, model: DelegationModel, n_types: int, n_outcomes: int):
        """Jeu fini échantillonné: types équirépartis, grilles de résultats sur O1 et O2."""
        if n_types < 5 or n_outcomes < 5:
            raise GameInputError("discrétisation: au moins 5 types et 5 résultats")
        types = np.linspace(model.t_low, model.t_high, n_types)
        weights = [Fraction(float(w)).limit_denominator(10 ** 4) for w in model.f(types)]
        total = sum(weights, Fraction(0))
        grids = [np.linspace(*model.outcome_range(k), n_outcomes) for k in range(2)]
        exact = [[Fraction(float(x)).limit_denominator(10 ** 6) for x in g] for g in grids]
        labels = [[f"o{k + 1}={float(x):.6g}" for x in exact[k]] for k in range(2)]
        t_exact = [Fraction(float(t)).limit_denominator(10 ** 6) for t in types]
        t_labels = [f"t={float(t):.6g}" for t in t_exact]

        def rat(x: float) -> Fraction:
            return Fraction(float(x)).limit_denominator(10 ** 6)

        doc = {
            "name": f"delegation-{n_types}x{n_outcomes}",
            "principals": ["1", "2"],
            "types": [{"label": lab, "prob": str(w / total)} for lab, w in zip(t_labels, weights)],
            "outcomes": {"1": labels[0], "2": labels[1]},
            "agent_utility": [],
            "principal_utility": {"mode": "independent", "tables": {"1": [], "2": []}},
        }
        for a, x1 in enumerate(exact[0]):
            for b, x2 in enumerate(exact[1]):
                for lab, t in zip(t_labels, t_exact):
                    doc["agent_utility"].append(
                        {"profile": [labels[0][a], labels[1][b]], "type": lab, "value": str(-(t - x1 - x2) ** 2)}
                    )
        for k in range(2):
            for a, x in enumerate(exact[k]):
                for lab, t in zip(t_labels, types):
                    weight, ideal = rat(model.r(k, t)), rat(model.ideal(k, t))
                    doc["principal_utility"]["tables"][str(k + 1)].append(
                        {"profile": [labels[k][a]], "type": lab, "value": str(-weight * (x - ideal) ** 2)}
                    )
        game = GameModelAgent().load_game(doc)
        values = [dict(zip(labels[k], map(float, exact[k]))) for k in range(2)]
        return game, types, values

    def cross_validate_discretized(self, model: DelegationModel, spec: RegimeSpec,
                                   n_types: int = 9, n_outcomes: int = 17) -> CrossValidation:
        """
        Compare l'allocation fermée à celle du solveur fini sur un jeu échantillonné.

        Args:
            model: modèle
            spec: régime certifié
            n_types: nombre de types échantillonnés
            n_outcomes: taille des grilles de résultats

        Returns:
            CrossValidation (distance sup, UPR du profil trouvé)
        """
        from app.assembly_agent import AssemblyAgent

        profile = self.build_delegation_profile(model, spec)
        game, types, values = self.discretize(model, n_types, n_outcomes)
        closed = np.column_stack([np.interp(types, profile.grid, profile.allocation[:, k]) for k in range(2)])

        # profil de départ: l'allocation fermée projetée sur les grilles de résultats
        start = []
        for k in range(2):
            labels = list(values[k])
            points = np.array([values[k][lab] for lab in labels])
            start.append({labels[int(np.abs(points - x).argmin())] for x in closed[:, k]})
        step = max((hi - lo) / (n_outcomes - 1) for lo, hi in (model.outcome_range(k) for k in range(2)))

        found = AssemblyAgent(self.settings).find_p3_induced_profiles(game, mode="iterate", start=MenuProfile.of(start))
        if not found:
            logger.warning("⚠ Aucun profil mutuel sur la grille (alignement exact rompu par la discrétisation)")
            return CrossValidation(n_types, n_outcomes, step, False, None, None)
        p3 = found[0]
        rows, distance = [], 0.0
        for t, (t_value, target) in enumerate(zip(types, closed)):
            o1 = values[0][p3.mechanisms[0].assignment[t]]
            o2 = values[1][p3.mechanisms[1].assignment[t]]
            gap = max(abs(o1 - target[0]), abs(o2 - target[1]))
            distance = max(distance, gap)
            rows.append({"t": float(t_value), "o1": o1, "o2": o2, "o1_closed": float(target[0]),
                         "o2_closed": float(target[1]), "distance": gap})
        logger.info(f"📊 Validation croisée {n_types}x{n_outcomes}: distance sup {distance:.4g} (pas {step:.4g})")
        return CrossValidation(n_types, n_outcomes, step, True, p3.passed, distance, rows)


if __name__ == "__main__":
    fixtures = Path(__file__).resolve().parent.parent / "fixtures"
    agent = DelegationAgent()
    model = agent.load_model(fixtures / "delegation-uniform.json")
    spec = agent.load_spec(fixtures / "delegation-full.json")
    report = agent.check_regime(model, spec)
    print(json.dumps(report.to_dict(), indent=2, ensure_ascii=False))
    if report.passed:
        print(agent.build_delegation_profile(model, spec, report).to_dict())
        print(agent.cross_validate_discretized(model, spec).to_dict()["sup_distance"])
