"""
Duopole de bundling en agence commune intrinsèque.

Deux firmes vendent des bundles b ⊆ {1..r} (masques de bits); le
consommateur de type t achète une paire (b1, b2) aux deux firmes ou rien.
Le module calcule le type seuil t*, les paires conjointement optimales,
construit et vérifie les profils de partage du marché et les menus
« base + upgrades ».
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import bisect

from app.config import DEFAULT_SETTINGS, Settings
from app.distribution import DensityDoc, Distribution
from app.errors import GameInputError, NumericalError, PreconditionError
from app.log import get_logger
from app.serialization import load_document
from app.workers import parallel_map

logger = get_logger(__name__)

PRESETS = ("union", "union_minus_intersection", "union_minus_intersection_premium", "tabulated")
MAX_GOODS = 6

Pair = Tuple[int, int]


def bundle_label(b: int, r: int) -> str:
    goods = [str(k + 1) for k in range(r) if b >> k & 1]
    return "{" + ",".join(goods) + "}" if goods else "∅"


def bundle_mask(goods: Sequence[int], r: int) -> int:
    mask = 0
    for g in goods:
        if not 1 <= int(g) <= r:
            raise GameInputError(f"bien inconnu: {g} (r={r})")
        mask |= 1 << (int(g) - 1)
    return mask


def _subset(a: int, b: int) -> bool:
    return a & b == a


# ============================================
# Documents (JSON)
# ============================================

class _Doc(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class TabulatedDoc(_Doc):
    t: List[float] = Field(min_length=3)
    values: Dict[str, List[float]]  # clé "b1|b2" en masques de bits


class BundlingModelDoc(_Doc):
    name: Optional[str] = None
    r: int = Field(ge=0, le=MAX_GOODS)
    t_low: float
    t_high: float
    density: DensityDoc = DensityDoc()
    preset: Literal["union", "union_minus_intersection", "union_minus_intersection_premium", "tabulated"]
    g: Optional[List[float]] = None
    premium: Optional[List[float]] = None
    pivot: float = 0.0
    table: Optional[TabulatedDoc] = None
    price_cap: float = Field(default=1e6, gt=0)
    grid: int = Field(default=2001, ge=5)


class PricedItemDoc(_Doc):
    bundle: List[int]
    price: float


class PricedMenuDoc(_Doc):
    items: List[PricedItemDoc] = Field(min_length=1)


# ============================================
# Types du domaine
# ============================================

@dataclass(frozen=True)
class BundlingModel:
    doc: BundlingModelDoc

    @property
    def r(self) -> int:
        return self.doc.r

    @property
    def bundles(self) -> range:
        return range(2 ** self.r)

    @property
    def full(self) -> int:
        return 2 ** self.r - 1

    @property
    def distribution(self) -> Distribution:
        return Distribution(self.doc.density, self.doc.t_low, self.doc.t_high)

    @property
    def t_low(self) -> float:
        return self.doc.t_low

    @property
    def t_high(self) -> float:
        return self.doc.t_high

    def complement(self, b: int) -> int:
        return self.full ^ b

    def label(self, b: int) -> str:
        return bundle_label(b, self.r)

    def pairs(self) -> List[Pair]:
        return list(itertools.product(self.bundles, self.bundles))

    def grid(self) -> np.ndarray:
        return np.linspace(self.t_low, self.t_high, self.doc.grid)

    def _premium_applies(self, b1: int, b2: int) -> bool:
        comp = self.complement(b1)
        return _subset(comp, b2) and b2 != comp

    def _slope(self, b1: int, b2: int) -> float:
        g = self.doc.g
        if self.doc.preset == "union":
            return g[b1 | b2]
        slope = g[b1 | b2] - g[b1 & b2]
        if self.doc.preset == "union_minus_intersection_premium" and self._premium_applies(b1, b2):
            slope += self.doc.premium[b2]
        return slope

    def _column(self, b1: int, b2: int) -> np.ndarray:
        try:
            return np.asarray(self.doc.table.values[f"{b1}|{b2}"], dtype=float)
        except KeyError:
            raise GameInputError(f"valeur tabulée manquante pour la paire {b1}|{b2}")

    def U(self, b1: int, b2: int, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.doc.preset == "tabulated":
            return np.interp(t, self.doc.table.t, self._column(b1, b2))
        value = self._slope(b1, b2) * t
        if self.doc.preset == "union_minus_intersection_premium" and self._premium_applies(b1, b2):
            value = value - self.doc.premium[b2] * self.doc.pivot
        return value

    def U_t(self, b1: int, b2: int, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.doc.preset == "tabulated":
            # différences centrées, unilatérales aux bords
            slope = np.gradient(self._column(b1, b2), self.doc.table.t)
            return np.interp(t, self.doc.table.t, slope)
        return np.full_like(t, self._slope(b1, b2))

    def virtual(self, b1: int, b2: int, t) -> np.ndarray:
        return self.U(b1, b2, t) - self.distribution.hazard(t) * self.U_t(b1, b2, t)


@dataclass
class PricedMenu:
    items: List[Tuple[int, float]]

    def bundles(self) -> List[int]:
        return [b for b, _ in self.items]

    def prices(self) -> List[float]:
        return [p for _, p in self.items]

    def price_of(self, b: int) -> float:
        return dict(self.items)[b]

    def validate(self, model: BundlingModel) -> None:
        seen = set()
        for b, p in self.items:
            if b not in model.bundles:
                raise GameInputError(f"bundle hors domaine: {b}")
            if b in seen:
                raise GameInputError(f"bundle {model.label(b)} présent deux fois dans le menu")
            seen.add(b)
            if not 0 <= p <= model.doc.price_cap:
                raise GameInputError(f"prix {p} hors de [0, {model.doc.price_cap}]")

    def to_dict(self, model: BundlingModel) -> List[dict]:
        return [{"bundle": model.label(b), "goods": [k + 1 for k in range(model.r) if b >> k & 1], "price": float(p)}
                for b, p in self.items]


@dataclass
class VirtualSurplus:
    base: int
    grid: np.ndarray
    values: Dict[int, np.ndarray]

    def argmax(self, k: int, tol: float) -> List[int]:
        column = {b: v[k] for b, v in self.values.items()}
        best = max(column.values())
        return [b for b, x in column.items() if x >= best - tol * max(1.0, abs(best))]


@dataclass
class TStar:
    variant: str
    t_star: float
    residual: float
    half_value: float
    rent_value: float
    boundary: bool = False

    def to_dict(self) -> dict:
        return {"variant": self.variant, "t_star": self.t_star, "residual": self.residual,
                "half_value": self.half_value, "rent_value": self.rent_value, "boundary": self.boundary}


@dataclass
class PairsReport:
    pairs: List[Pair]
    non_increasing_u: List[Pair] = field(default_factory=list)
    non_increasing_virtual: List[Pair] = field(default_factory=list)

    def to_dict(self, model: BundlingModel) -> dict:
        def fmt(pairs):
            return [[model.label(a), model.label(b)] for a, b in pairs]
        return {"pairs": fmt(self.pairs), "count": len(self.pairs), "empty": not self.pairs,
                "hypotheses": {"u_not_strictly_increasing": fmt(self.non_increasing_u),
                               "virtual_not_strictly_increasing": fmt(self.non_increasing_virtual)}}


@dataclass
class SplitReport:
    passed: bool
    t_star: float
    price: float
    violation: Optional[Dict] = None

    def to_dict(self) -> dict:
        return {"status": "pass" if self.passed else "fail", "t_star": self.t_star,
                "price": self.price, "violation": self.violation}


@dataclass
class SplitAudit:
    passed: bool
    t_star: float
    price_symmetric: bool
    below: List[float] = field(default_factory=list)
    above: List[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"status": "pass" if self.passed else "fail", "t_star": self.t_star,
                "price_symmetric": self.price_symmetric,
                "participating_below_cutoff": self.below[:20], "quitting_above_cutoff": self.above[:20]}


@dataclass
class MDStarReport:
    base: int
    passed: bool
    violations: List[Dict]
    worst_reversal: float
    non_monotone_members: List[int]
    scope: str = "necessary, deterministic-pair scope"

    def to_dict(self, model: BundlingModel) -> dict:
        return {
            "base": model.label(self.base),
            "status": "pass" if self.passed else "fail",
            "scope": self.scope,
            "worst_reversal": self.worst_reversal,
            "violations": [{"pair": [model.label(a), model.label(b)], "reversal": v["reversal"]}
                           for v in self.violations for a, b in [v["pair"]]],
            "non_monotone_members": [model.label(b) for b in self.non_monotone_members],
        }


@dataclass
class UpgradeMenus:
    base: int
    base_menu: PricedMenu
    upgrades: PricedMenu
    structure: str
    t_star: float
    breakpoints: List[float]
    grid: np.ndarray
    allocation: List[Optional[int]]

    def to_frame(self, model: BundlingModel) -> pd.DataFrame:
        return pd.DataFrame({"t": self.grid, "upgrade": [None if b is None else model.label(b) for b in self.allocation]})

    def to_dict(self, model: BundlingModel) -> dict:
        return {
            "base": model.label(self.base),
            "base_menu": self.base_menu.to_dict(model),
            "upgrade_menu": self.upgrades.to_dict(model),
            "structure": self.structure,
            "t_star": self.t_star,
            "breakpoints": self.breakpoints,
        }


@dataclass
class UpgradeAudit:
    passed: bool
    self_selection: List[Dict]
    participation: List[float]

    def to_dict(self) -> dict:
        return {"status": "pass" if self.passed else "fail",
                "self_selection_violations": self.self_selection[:20],
                "participation_violations": self.participation[:20]}


def _md_pair_worker(model: BundlingModel, base: int, grid: np.ndarray, pair: Pair) -> Tuple[Pair, float]:
    a, b = pair
    diff = model.virtual(base, a, grid) - model.virtual(base, b, grid)
    steps = np.diff(diff)
    up = float(np.clip(steps, 0, None).max(initial=0.0))
    down = float(np.clip(-steps, 0, None).max(initial=0.0))
    # le plus petit mouvement de sens contraire mesure l'inversion
    return pair, min(up, down)


class BundlingAgent:
    def __init__(self, settings: Settings = DEFAULT_SETTINGS):
        """Agent du duopole de bundling (t*, paires optimales, menus)."""
        self.settings = settings

    # ============================================
    # Chargement
    # ============================================

    def load_model(self, document: Union[str, bytes, dict, Path]) -> BundlingModel:
        """
        Charge et valide un modèle de bundling.

        Args:
            document: texte JSON, dict ou chemin

        Returns:
            BundlingModel
        """
        doc = load_document(BundlingModelDoc, document)
        n = 2 ** doc.r
        if doc.preset != "tabulated":
            if doc.g is None or len(doc.g) != n:
                raise GameInputError(f"g doit avoir {n} valeurs (une par bundle)")
            for a, b in itertools.product(range(n), repeat=2):
                if a != b and _subset(a, b) and not doc.g[a] < doc.g[b]:
                    raise GameInputError(
                        f"g non strictement croissante: g({bundle_label(a, doc.r)}) ≥ g({bundle_label(b, doc.r)})"
                    )
        if doc.preset == "union_minus_intersection_premium" and (doc.premium is None or len(doc.premium) != n):
            raise GameInputError(f"premium doit avoir {n} valeurs")
        if doc.preset == "tabulated":
            if doc.table is None:
                raise GameInputError("preset tabulated: table requise")
            if np.any(np.diff(doc.table.t) <= 0):
                raise GameInputError("table: grille t strictement croissante requise")
            for key, column in doc.table.values.items():
                if len(column) != len(doc.table.t):
                    raise GameInputError(f"table: colonne {key} de mauvaise longueur")
        model = BundlingModel(doc)
        model.distribution.validate(doc.grid, self.tolerance(model), vanishing_top=True)
        if doc.preset == "tabulated":
            for b1, b2 in model.pairs():
                model._column(b1, b2)
        logger.debug(f"✓ Modèle de bundling chargé: r={doc.r}, preset {doc.preset}")
        return model

    def load_menu(self, model: BundlingModel, document) -> PricedMenu:
        doc = load_document(PricedMenuDoc, document)
        menu = PricedMenu([(bundle_mask(item.bundle, model.r), item.price) for item in doc.items])
        menu.validate(model)
        return menu

    def tolerance(self, model: BundlingModel) -> float:
        analytic = model.distribution.analytic and model.doc.preset != "tabulated"
        return self.settings.tol_analytic if analytic else self.settings.tol_sampled

    def virtual_surplus(self, model: BundlingModel, base: int) -> VirtualSurplus:
        grid = model.grid()
        return VirtualSurplus(base, grid, {b: model.virtual(base, b, grid) for b in model.bundles})

    # ============================================
    # Type seuil
    # ============================================

    def find_tstar(self, model: BundlingModel, variant: Union[str, int] = "market_split") -> TStar:
        """
        Type seuil t*: ½·U = (1-F)/f·U_t pour la paire de référence.

        Args:
            model: modèle
            variant: "market_split" (paire maximisant U) ou un bundle de base (paire (b, b^c))

        Returns:
            TStar (t*, résidu, valeurs des deux membres)
        """
        dist = model.distribution
        if variant == "market_split":
            pairs = model.pairs()
            label = "market_split"

            def pair_at(t: float) -> Pair:
                values = [float(model.U(a, b, t)) for a, b in pairs]
                return pairs[int(np.argmax(values))]
        else:
            base = int(variant)
            if base not in model.bundles:
                raise GameInputError(f"bundle de base hors domaine: {base}")
            label = f"base {model.label(base)}"

            def pair_at(t: float) -> Pair:
                return base, model.complement(base)

        def sides(t: float) -> Tuple[float, float]:
            a, b = pair_at(t)
            return float(model.U(a, b, t)) / 2, float(dist.hazard(t) * model.U_t(a, b, t))

        def h(t: float) -> float:
            half, rent = sides(t)
            return rent - half

        grid = model.grid()
        values = np.array([h(t) for t in grid])
        steps = np.diff(values)
        if not (np.all(steps < 0) or np.all(steps > 0)):
            raise NumericalError(f"t* ({label}): fonction définissante non strictement monotone sur la grille")
        a, b = pair_at(model.t_low)
        if np.any(np.diff(model.U(a, b, grid)) <= 0):
            raise NumericalError(f"t* ({label}): U non strictement croissante en t")

        low, high = h(model.t_low), h(model.t_high)
        if low <= 0:
            t_star, boundary = model.t_low, True
        elif high > 0:
            raise NumericalError(f"t* ({label}): pas de changement de signe sur [{model.t_low}, {model.t_high}]")
        elif high == 0:
            t_star, boundary = model.t_high, True
        else:
            t_star, boundary = bisect(h, model.t_low, model.t_high, xtol=1e-14, maxiter=400), False
        half, rent = sides(t_star)
        result = TStar(label, float(t_star), abs(rent - half), half, rent, boundary)
        logger.info(f"✓ t* ({label}) = {result.t_star:.12g} (résidu {result.residual:.1e})")
        return result

    # ============================================
    # Partage du marché
    # ============================================

    def jointly_optimal_pairs(self, model: BundlingModel, tie_tol: Optional[float] = None) -> PairsReport:
        """
        Paires maximisant à la fois U et le surplus virtuel pour tout t de la grille.

        Args:
            model: modèle
            tie_tol: tolérance relative des égalités (défaut: réglage tie_tol)

        Returns:
            PairsReport
        """
        tol = self.settings.tie_tol if tie_tol is None else tie_tol
        grid = model.grid()
        pairs = model.pairs()
        gross = np.array([model.U(a, b, grid) for a, b in pairs])
        virtual = np.array([model.virtual(a, b, grid) for a, b in pairs])

        def optimal(table: np.ndarray) -> np.ndarray:
            best = table.max(axis=0)
            return np.all(table >= best - tol * np.maximum(1.0, np.abs(best)), axis=1)

        keep = optimal(gross) & optimal(virtual)
        found = [p for p, k in zip(pairs, keep) if k]
        report = PairsReport(
            found,
            [p for p, row in zip(pairs, gross) if np.any(np.diff(row) <= 0)],
            [p for p, row in zip(pairs, virtual) if np.any(np.diff(row) <= 0)],
        )
        if not found:
            logger.warning("⚠ Aucune paire conjointement optimale: le partage du marché ne s'applique pas")
        else:
            logger.info(f"✓ {len(found)} paire(s) conjointement optimale(s)")
        return report

    def _split_price(self, model: BundlingModel, tstar: TStar) -> float:
        return max(float(model.U(a, b, tstar.t_star)) for a, b in model.pairs()) / 2

    def check_market_splitting(self, model: BundlingModel, menu1: PricedMenu, menu2: PricedMenu) -> SplitReport:
        """
        Vérifie l'appariement croisé dans les paires optimales et l'égalité des prix.

        Args:
            model: modèle
            menu1, menu2: menus des deux firmes

        Returns:
            SplitReport (première violation rencontrée)
        """
        menu1.validate(model)
        menu2.validate(model)
        tstar = self.find_tstar(model, "market_split")
        price = self._split_price(model, tstar)
        optimal = set(self.jointly_optimal_pairs(model).pairs)
        tol = self.tolerance(model) * max(1.0, price)

        def fail(violation: dict) -> SplitReport:
            logger.info(f"✗ Partage du marché: {violation['reason']}")
            return SplitReport(False, tstar.t_star, price, violation)

        for b in menu1.bundles():
            if not any((b, c) in optimal for c in menu2.bundles()):
                return fail({"reason": "appariement", "firm": 1, "bundle": model.label(b)})
        for c in menu2.bundles():
            if not any((b, c) in optimal for b in menu1.bundles()):
                return fail({"reason": "appariement", "firm": 2, "bundle": model.label(c)})
        for firm, menu in ((1, menu1), (2, menu2)):
            for b, p in menu.items:
                if abs(p - price) > tol:
                    return fail({"reason": "prix", "firm": firm, "bundle": model.label(b),
                                 "price": p, "expected": price})
        logger.info("✓ Profil de partage du marché vérifié")
        return SplitReport(True, tstar.t_star, price)

    def build_market_split(self, model: BundlingModel, menu1_bundles: Sequence[int]) -> Tuple[PricedMenu, PricedMenu]:
        """Menus (firme 1, firme 2) appariés dans les paires optimales, au prix ½·max U(·, t*)."""
        optimal = self.jointly_optimal_pairs(model).pairs
        if not optimal:
            raise PreconditionError("aucune paire conjointement optimale")
        tstar = self.find_tstar(model, "market_split")
        price = self._split_price(model, tstar)
        partners: List[int] = []
        for b in menu1_bundles:
            matches = [c for a, c in optimal if a == b]
            if not matches:
                raise PreconditionError(f"aucun partenaire optimal pour {model.label(b)}")
            comp = model.complement(b)
            choice = comp if comp in matches else matches[0]
            if choice not in partners:
                partners.append(choice)
        menu1 = PricedMenu([(b, price) for b in dict.fromkeys(menu1_bundles)])
        menu2 = PricedMenu([(c, price) for c in partners])
        menu1.validate(model)
        menu2.validate(model)
        return menu1, menu2

    def audit_market_split(self, model: BundlingModel, menu1: PricedMenu, menu2: PricedMenu) -> SplitAudit:
        """
        Audit de participation: sous t* le consommateur sort strictement, au-dessus il participe.

        Args:
            model: modèle
            menu1, menu2: menus vérifiés

        Returns:
            SplitAudit
        """
        tstar = self.find_tstar(model, "market_split")
        grid = model.grid()
        tol = self.tolerance(model)
        best = np.full_like(grid, -np.inf)
        for (b1, p1), (b2, p2) in itertools.product(menu1.items, menu2.items):
            best = np.maximum(best, model.U(b1, b2, grid) - p1 - p2)
        prices = menu1.prices() + menu2.prices()
        scale = tol * max(1.0, max(prices))
        below = [float(t) for t, v in zip(grid, best) if t < tstar.t_star and v >= 0]
        above = [float(t) for t, v in zip(grid, best) if t >= tstar.t_star and v < -scale]
        symmetric = max(prices) - min(prices) <= scale
        passed = not below and not above and symmetric
        logger.info(f"{'✓' if passed else '✗'} Audit de participation (t* = {tstar.t_star:.6g})")
        return SplitAudit(passed, tstar.t_star, symmetric, below, above)

    # ============================================
    # Base + upgrades
    # ============================================

    def check_md_star(self, model: BundlingModel, base: int) -> MDStarReport:
        """
        Monotonie des différences de surplus virtuels φ^base(b,·) - φ^base(b',·).

        Seules les paires déterministes sont testées (condition nécessaire).
        """
        grid = model.grid()
        tol = self.tolerance(model)
        pairs = list(itertools.combinations(model.bundles, 2))
        results = parallel_map(partial(_md_pair_worker, model, base, grid), pairs, self.settings.jobs)
        violations = [{"pair": pair, "reversal": rev} for pair, rev in results if rev > tol]
        worst = max((rev for _, rev in results), default=0.0)
        non_monotone = []
        for b in model.bundles:
            steps = np.diff(model.virtual(base, b, grid))
            if not (np.all(steps >= -tol) or np.all(steps <= tol)):
                non_monotone.append(b)
        report = MDStarReport(base, not violations, violations, worst, non_monotone)
        logger.info(f"{'✓' if report.passed else '✗'} MD* (base {model.label(base)}): "
                    f"{len(violations)} paire(s) en violation")
        return report

    def build_base_plus_upgrades(self, model: BundlingModel, base: int) -> UpgradeMenus:
        """
        Menu singleton de la base et menu d'upgrades issu de l'enveloppe de φ^base.

        Args:
            model: modèle
            base: bundle de la firme 1

        Returns:
            UpgradeMenus (prix par indifférence aux points de rupture, structure)
        """
        md = self.check_md_star(model, base)
        if not md.passed:
            raise PreconditionError(f"MD* non satisfaite pour la base {model.label(base)}")
        tstar = self.find_tstar(model, base)
        tol = self.settings.tie_tol
        root = model.complement(base)
        surplus = self.virtual_surplus(model, base)
        grid = surplus.grid

        start = int(np.searchsorted(grid, tstar.t_star, side="left"))
        if root not in surplus.argmax(min(start, len(grid) - 1), tol):
            raise PreconditionError(f"le complément {model.label(root)} ne maximise pas φ en t*")
        sequence, breakpoints = [root], []
        allocation: List[Optional[int]] = [None] * start
        current = root
        for k in range(start, len(grid)):
            winners = surplus.argmax(k, tol)
            if current not in winners:
                nxt = winners[0]
                if nxt in sequence:
                    raise NumericalError(f"allocation non monotone: {model.label(nxt)} réapparaît en t={grid[k]:.6g}")
                breakpoints.append(self._breakpoint(model, base, current, nxt, grid[k - 1], grid[k]))
                sequence.append(nxt)
                current = nxt
            allocation.append(current)

        prices = [float(model.U(base, root, tstar.t_star)) / 2]
        for k, tau in enumerate(breakpoints):
            gap = float(model.U(base, sequence[k + 1], tau) - model.U(base, sequence[k], tau))
            prices.append(prices[-1] + gap)
        upgrades = PricedMenu(list(zip(sequence, prices)))
        base_menu = PricedMenu([(base, prices[0])])
        upgrades.validate(model)
        base_menu.validate(model)

        if len(sequence) == 1:
            structure = "singleton"
        elif all(_subset(a, b) for a, b in zip(sequence, sequence[1:])):
            structure = "nested"
        elif all(_subset(root, b) for b in sequence):
            structure = "tree"
        else:
            raise NumericalError("menu d'upgrades ni emboîté ni arborescent")
        logger.info(f"✓ Base {model.label(base)}: {len(sequence)} upgrade(s), structure {structure}")
        return UpgradeMenus(base, base_menu, upgrades, structure, tstar.t_star, breakpoints, grid, allocation)

    def _breakpoint(self, model: BundlingModel, base: int, old: int, new: int, left: float, right: float) -> float:
        def gap(t: float) -> float:
            return float(model.virtual(base, new, t) - model.virtual(base, old, t))

        a, b = gap(left), gap(right)
        if a >= 0:
            return float(left)
        if b <= 0:
            return float(right)
        return float(bisect(gap, left, right, xtol=1e-14, maxiter=400))

    def audit_upgrades(self, model: BundlingModel, result: UpgradeMenus) -> UpgradeAudit:
        """Auto-sélection et participation sur la grille pour un menu base + upgrades construit."""
        tol = self.settings.tol_sampled
        base_price = result.base_menu.items[0][1]
        selection, participation = [], []
        for t, assigned in zip(result.grid, result.allocation):
            if assigned is None:
                continue
            values = {b: float(model.U(result.base, b, t)) - p for b, p in result.upgrades.items}
            best = max(values.values())
            if values[assigned] < best - tol * max(1.0, abs(best)):
                better = max(values, key=values.get)
                selection.append({"t": float(t), "assigned": model.label(assigned), "preferred": model.label(better)})
            if values[assigned] - base_price < -tol * max(1.0, abs(base_price)):
                participation.append(float(t))
        passed = not selection and not participation
        logger.info(f"{'✓' if passed else '✗'} Audit des upgrades: {len(selection)} violation(s) d'auto-sélection")
        return UpgradeAudit(passed, selection, participation)

    def check_nondegeneracy(self, model: BundlingModel, base: int) -> Dict:
        """Existe-t-il b' ⊋ base^c avec U((base,b'), t_high) > U((base, base^c), t_high) ?"""
        root = model.complement(base)
        reference = float(model.U(base, root, model.t_high))
        witnesses = [b for b in model.bundles
                     if b != root and _subset(root, b) and float(model.U(base, b, model.t_high)) > reference]
        return {"base": model.label(base), "non_degenerate": bool(witnesses),
                "witnesses": [model.label(b) for b in witnesses]}


if __name__ == "__main__":
    fixtures = Path(__file__).resolve().parent.parent / "fixtures"
    agent = BundlingAgent()
    model = agent.load_model(fixtures / "uniform12-union.json")
    print(agent.find_tstar(model).to_dict())
    print(agent.jointly_optimal_pairs(model).to_dict(model))
    premium = agent.load_model(fixtures / "uniform12-premium.json")
    print(agent.build_base_plus_upgrades(premium, 1).to_dict(premium))
