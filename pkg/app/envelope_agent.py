"""
Enveloppes supérieures de familles échantillonnées.

Pour une famille finie f^j(t) de fonctions C¹ sur une grille commune:
enveloppe g = max_j f^j, ensembles actifs, coudes (le coude d'une enveloppe
supérieure est toujours « vers le haut »), borne de Lipschitz et identité
intégrale g(t) = g(t_low) + ∫ f'_actif.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from app.config import DEFAULT_SETTINGS, Settings
from app.errors import GameInputError, NumericalError
from app.log import get_logger
from app.serialization import load_document

logger = get_logger(__name__)


class MemberDoc(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: Optional[str] = None
    values: List[float]
    derivatives: Optional[List[float]] = None


class FamilyDoc(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: Optional[str] = None
    grid: List[float] = Field(min_length=2)
    members: List[MemberDoc] = Field(min_length=1)


@dataclass
class SampledFamily:
    grid: np.ndarray
    values: np.ndarray       # (J, N)
    derivatives: np.ndarray  # (J, N)
    names: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        self.derivatives = np.atleast_2d(np.asarray(self.derivatives, dtype=float))
        if not self.names:
            self.names = [f"f{j}" for j in range(len(self.values))]

    @property
    def size(self) -> int:
        return len(self.values)


@dataclass
class Kink:
    location: float
    left_slope: float
    right_slope: float
    upward: bool
    interval: int            # indice k de [t_k, t_k+1], ou du point t_k si on_grid
    left_member: int
    right_member: int
    on_grid: bool = False
    tolerance: float = 0.0

    def to_dict(self, names: Sequence[str]) -> dict:
        return {"location": self.location, "left_slope": self.left_slope, "right_slope": self.right_slope,
                "upward": self.upward, "tolerance": self.tolerance,
                "left": names[self.left_member], "right": names[self.right_member]}


@dataclass
class EnvelopeAudit:
    family: SampledFamily
    envelope: np.ndarray
    active: List[Tuple[int, ...]]
    kinks: List[Kink]
    tolerance: float
    lipschitz: Optional["LipschitzReport"] = None
    residuals: Optional[np.ndarray] = None

    @property
    def grid(self) -> np.ndarray:
        return self.family.grid

    def to_frame(self) -> pd.DataFrame:
        names = self.family.names
        frame = pd.DataFrame({"t": self.grid, "envelope": self.envelope,
                              "active": [",".join(names[j] for j in a) for a in self.active]})
        if self.residuals is not None:
            frame["residual"] = self.residuals
        return frame

    def to_dict(self) -> dict:
        names = self.family.names
        out = {
            "points": len(self.grid),
            "members": names,
            "kinks": [k.to_dict(names) for k in self.kinks],
            "tolerance": self.tolerance,
        }
        if self.lipschitz is not None:
            out["lipschitz"] = self.lipschitz.to_dict()
        if self.residuals is not None:
            out["max_residual"] = float(np.max(np.abs(self.residuals)))
        return out


@dataclass
class KinkReport:
    passed: bool
    kinks: List[Kink]
    downward: List[Kink]

    def to_dict(self, names: Sequence[str]) -> dict:
        return {"status": "pass" if self.passed else "fail", "kinks": len(self.kinks),
                "downward": [k.to_dict(names) for k in self.downward]}


@dataclass
class LipschitzReport:
    quotient: float
    bound: float
    passed: bool

    def to_dict(self) -> dict:
        return {"status": "pass" if self.passed else "fail", "envelope_quotient": self.quotient,
                "member_bound": self.bound}


@dataclass
class IntegralReport:
    residuals: np.ndarray
    max_residual: float
    step: float

    def to_dict(self) -> dict:
        return {"max_residual": self.max_residual, "grid_step": self.step}


def _active_sets(values: np.ndarray, best: np.ndarray, tol: float) -> List[Tuple[int, ...]]:
    scale = tol * np.maximum(1.0, np.abs(best))
    hits = np.abs(values - best) <= scale
    return [tuple(int(j) for j in np.flatnonzero(hits[:, k])) for k in range(values.shape[1])]


def _root_between(grid: np.ndarray, diff: np.ndarray, k: int) -> float:
    """Zéro (interpolation linéaire) de diff sur [t_k, t_k+1]."""
    a, b = diff[k], diff[k + 1]
    if a == b:
        return float((grid[k] + grid[k + 1]) / 2)
    theta = np.clip(a / (a - b), 0.0, 1.0)
    return float(grid[k] + theta * (grid[k + 1] - grid[k]))


class EnvelopeAgent:
    def __init__(self, settings: Settings = DEFAULT_SETTINGS):
        """Agent des enveloppes supérieures (coudes, Lipschitz, identité intégrale)."""
        self.settings = settings

    # ============================================
    # Familles
    # ============================================

    def load_family(self, document: Union[str, bytes, dict, Path]) -> SampledFamily:
        """
        Charge une famille échantillonnée (grille + tableaux par membre).

        Args:
            document: texte JSON, dict ou chemin

        Returns:
            SampledFamily (dérivées par différences centrées si absentes)
        """
        doc = load_document(FamilyDoc, document)
        grid = np.asarray(doc.grid, dtype=float)
        values, derivatives, names = [], [], []
        for j, member in enumerate(doc.members):
            if len(member.values) != len(grid):
                raise NumericalError(f"membre {member.name or j}: {len(member.values)} valeurs pour {len(grid)} points")
            v = np.asarray(member.values, dtype=float)
            if member.derivatives is None:
                d = np.gradient(v, grid)
            elif len(member.derivatives) != len(grid):
                raise NumericalError(f"membre {member.name or j}: dérivées mal alignées sur la grille")
            else:
                d = np.asarray(member.derivatives, dtype=float)
            values.append(v)
            derivatives.append(d)
            names.append(member.name or f"f{j}")
        family = SampledFamily(grid, values, derivatives, names)
        self._validate(family)
        return family

    def family_from_functions(
        self,
        grid: Sequence[float],
        functions: Sequence[Callable[[np.ndarray], np.ndarray]],
        derivatives: Optional[Sequence[Callable[[np.ndarray], np.ndarray]]] = None,
        names: Optional[Sequence[str]] = None,
    ) -> SampledFamily:
        """
        Échantillonne des fonctions vectorisées sur une grille.

        Args:
            grid: grille croissante
            functions: f^j(t) (acceptent un tableau numpy)
            derivatives: f^j'(t); à défaut différences centrées, unilatérales aux bords
            names: noms des membres

        Returns:
            SampledFamily
        """
        grid = np.asarray(grid, dtype=float)
        values = np.array([np.broadcast_to(np.asarray(fn(grid), dtype=float), grid.shape) for fn in functions])
        if derivatives is None:
            slopes = np.array([np.gradient(v, grid) for v in values])
        else:
            slopes = np.array([np.broadcast_to(np.asarray(fn(grid), dtype=float), grid.shape) for fn in derivatives])
        family = SampledFamily(grid, values, slopes, list(names or []))
        self._validate(family)
        return family

    def random_polynomial_family(
        self,
        seed: int,
        members: int = 3,
        degree: int = 3,
        points: int = 401,
        interval: Tuple[float, float] = (0.0, 1.0),
        scale: float = 2.0,
    ) -> SampledFamily:
        """Famille de polynômes aléatoires (coefficients uniformes dans [-scale, scale]), dérivées exactes."""
        rng = np.random.default_rng(seed)
        grid = np.linspace(interval[0], interval[1], points)
        coeffs = rng.uniform(-scale, scale, size=(members, degree + 1))
        values = np.array([np.polynomial.polynomial.polyval(grid, c) for c in coeffs])
        slopes = np.array([np.polynomial.polynomial.polyval(grid, np.polynomial.polynomial.polyder(c))
                           for c in coeffs])
        return SampledFamily(grid, values, slopes, [f"p{j}" for j in range(members)])

    def _validate(self, family: SampledFamily) -> None:
        n = len(family.grid)
        if n < 2:
            raise NumericalError("au moins 2 points de grille requis")
        if family.values.shape[1] != n or family.derivatives.shape != family.values.shape:
            raise NumericalError("membres et grille de tailles différentes")
        if np.any(np.diff(family.grid) <= 0):
            raise GameInputError("grille strictement croissante requise")

    # ============================================
    # Enveloppe et coudes
    # ============================================

    def tolerance(self, family: SampledFamily) -> float:
        # erreur d'interpolation des dérivées sur un pas de grille, pire membre
        steps = np.abs(np.diff(family.derivatives, axis=1))
        return self.settings.tol_sampled + 2 * float(steps.max(initial=0.0))

    def kink_tolerance(self, family: SampledFamily, members: Sequence[int], cells: Sequence[int]) -> float:
        """Tolérance d'un coude: variation des dérivées des seuls membres qui se croisent, sur leurs cellules."""
        steps = np.abs(np.diff(family.derivatives[np.ix_(list(members), list(cells) + [cells[-1] + 1])], axis=1))
        return self.settings.tol_sampled + 2 * float(steps.max(initial=0.0))

    def upper_envelope(self, family: SampledFamily) -> EnvelopeAudit:
        """
        Maximum ponctuel, ensembles actifs et coudes.

        Args:
            family: famille échantillonnée (≥ 2 points)

        Returns:
            EnvelopeAudit
        """
        self._validate(family)
        best = family.values.max(axis=0)
        return self._audit(family, best, _active_sets(family.values, best, self.settings.tie_tol))

    def lower_envelope(self, family: SampledFamily) -> EnvelopeAudit:
        """Minimum ponctuel présenté comme une enveloppe: ses coudes sont vers le bas (entrée corrompue)."""
        self._validate(family)
        worst = family.values.min(axis=0)
        return self._audit(family, worst, _active_sets(family.values, worst, self.settings.tie_tol))

    def _audit(self, family: SampledFamily, envelope: np.ndarray, active: List[Tuple[int, ...]]) -> EnvelopeAudit:
        tol = self.tolerance(family)
        kinks = self._detect_kinks(family, active)
        logger.debug(f"📊 Enveloppe: {family.size} membre(s), {len(kinks)} coude(s)")
        return EnvelopeAudit(family, envelope, active, kinks, tol)

    def _detect_kinks(self, family: SampledFamily, active: List[Tuple[int, ...]]) -> List[Kink]:
        grid, values, slopes = family.grid, family.values, family.derivatives
        # membres actifs aux deux bouts de chaque intervalle
        shared = [set(active[k]) & set(active[k + 1]) for k in range(len(grid) - 1)]
        kinks: List[Kink] = []
        for k, common in enumerate(shared):
            if not common:
                a, b = active[k][0], active[k + 1][0]
                x = _root_between(grid, values[b] - values[a], k)
                left = float(np.interp(x, grid[k:k + 2], slopes[a, k:k + 2]))
                right = float(np.interp(x, grid[k:k + 2], slopes[b, k:k + 2]))
                tol = self.kink_tolerance(family, (a, b), [k])
                kinks.append(Kink(x, left, right, right >= left - tol, k, a, b, tolerance=tol))
            elif k > 0 and shared[k - 1] and not (shared[k - 1] & common):
                a, b = min(shared[k - 1]), min(common)
                left, right = float(slopes[a, k]), float(slopes[b, k])
                tol = self.kink_tolerance(family, (a, b), [k - 1, k])
                kinks.append(Kink(float(grid[k]), left, right, right >= left - tol, k, a, b, on_grid=True, tolerance=tol))
        return kinks

    def kink_audit(self, audit: EnvelopeAudit) -> KinkReport:
        """
        Tous les coudes sont-ils vers le haut (pente droite ≥ pente gauche - tolérance) ?

        Un coude vers le bas signale une entrée qui n'est pas l'enveloppe
        supérieure d'une famille C¹.
        """
        downward = [k for k in audit.kinks if not k.upward]
        report = KinkReport(not downward, audit.kinks, downward)
        if downward:
            logger.info(f"✗ Coude vers le bas en t={downward[0].location:.6g}")
        else:
            logger.info(f"✓ {len(audit.kinks)} coude(s), tous vers le haut")
        return report

    # ============================================
    # Lipschitz et identité intégrale
    # ============================================

    def lipschitz_audit(self, family: SampledFamily, audit: EnvelopeAudit) -> LipschitzReport:
        """Quotient max |Δg/Δt| de l'enveloppe contre max_j max_t |f^j'|."""
        quotient = float(np.max(np.abs(np.diff(audit.envelope)) / np.diff(audit.grid)))
        bound = float(np.max(np.abs(family.derivatives)))
        report = LipschitzReport(quotient, bound, quotient <= bound + audit.tolerance)
        audit.lipschitz = report
        logger.info(f"{'✓' if report.passed else '✗'} Lipschitz: {quotient:.6g} ≤ {bound:.6g}")
        return report

    def envelope_integral_check(
        self,
        audit: EnvelopeAudit,
        value: Optional[np.ndarray] = None,
        integrand: Optional[np.ndarray] = None,
    ) -> IntegralReport:
        """
        Résidu de V(t) - V(t_low) - ∫ f'_actif(s) ds.

        Args:
            audit: enveloppe de la famille
            value: V(t) sur la grille (défaut: l'enveloppe)
            integrand: dérivée du membre sélectionné (défaut: membre actif
                sur chaque intervalle, trapèze coupé aux coudes)

        Returns:
            IntegralReport (profil de résidus et max |résidu|)
        """
        family, grid = audit.family, audit.grid
        value = audit.envelope if value is None else np.asarray(value, dtype=float)
        if len(value) != len(grid):
            raise NumericalError("valeur et grille de tailles différentes")
        widths = np.diff(grid)
        if integrand is not None:
            integrand = np.asarray(integrand, dtype=float)
            pieces = widths * (integrand[:-1] + integrand[1:]) / 2
        else:
            slopes = family.derivatives
            pieces = np.empty_like(widths)
            for k in range(len(widths)):
                common = set(audit.active[k]) & set(audit.active[k + 1])
                if common:
                    m = min(common)
                    pieces[k] = widths[k] * (slopes[m, k] + slopes[m, k + 1]) / 2
            # un coude à l'intérieur d'un intervalle coupe le trapèze en deux
            for kink in audit.kinks:
                if kink.on_grid:
                    continue
                k, x = kink.interval, kink.location
                left = slopes[kink.left_member, k]
                right = slopes[kink.right_member, k + 1]
                pieces[k] = ((x - grid[k]) * (left + kink.left_slope)
                             + (grid[k + 1] - x) * (kink.right_slope + right)) / 2
        integral = np.concatenate([[0.0], np.cumsum(pieces)])
        residuals = value - value[0] - integral
        audit.residuals = residuals
        report = IntegralReport(residuals, float(np.max(np.abs(residuals))), float(widths.max()))
        logger.info(f"📊 Identité intégrale: résidu max {report.max_residual:.2e} (pas {report.step:.1e})")
        return report

    def audit_family(self, family: SampledFamily) -> dict:
        """Enveloppe, coudes, Lipschitz et identité intégrale en un rapport."""
        audit = self.upper_envelope(family)
        kinks = self.kink_audit(audit)
        lipschitz = self.lipschitz_audit(family, audit)
        integral = self.envelope_integral_check(audit)
        return {
            "status": "pass" if kinks.passed and lipschitz.passed else "fail",
            "envelope": audit.to_dict(),
            "kink_audit": kinks.to_dict(family.names),
            "lipschitz": lipschitz.to_dict(),
            "integral": integral.to_dict(),
        }


if __name__ == "__main__":
    agent = EnvelopeAgent()
    fixtures = Path(__file__).resolve().parent.parent / "fixtures"
    family = agent.load_family(fixtures / "envelope-linear.json")
    print(agent.audit_family(family))
    print(agent.kink_audit(agent.lower_envelope(family)).to_dict(family.names))
    cubic = agent.random_polynomial_family(seed=7)
    print(agent.audit_family(cubic)["kink_audit"])
