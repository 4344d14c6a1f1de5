"""
Vérification indépendante des équilibres (PBE) par énumération des déviations,
et faisabilité exacte d'une stratégie de l'agent qui soutient un profil.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd

from app.config import DEFAULT_SETTINGS, Settings
from app.errors import BoundExceededError, GameInputError, PreconditionError
from app.fourier_motzkin import EliminationResult, FourierMotzkin, LinearSystem
from app.game_model import (
    QUIT,
    AgentStrategy,
    Choice,
    DirectMechanism,
    FiniteGame,
    GameModelAgent,
    LexicographicRule,
    MenuProfile,
    StrategyEntry,
    format_rational,
)
from app.log import get_logger
from app.workers import parallel_map

logger = get_logger(__name__)

Node = Tuple[MenuProfile, int]


def _choice_dict(choice: Choice):
    return QUIT if choice == QUIT else list(choice)


class AdversarialRule(LexicographicRule):
    """
    Règle de repli autour d'un profil d'équilibre.

    Déviation unilatérale du principal i: choix agent-optimal minimisant u_i,
    puis lexicographique. Autres profils: lexicographique.
    """

    policy = "adversarial-to-deviator"

    def __init__(self, game: FiniteGame, on_path: MenuProfile):
        super().__init__(game)
        self.on_path = on_path

    def deviator(self, profile: MenuProfile) -> Optional[int]:
        changed = [i for i, (a, b) in enumerate(zip(profile.menus, self.on_path.menus)) if a != b]
        return changed[0] if len(changed) == 1 else None

    def __call__(self, profile: MenuProfile, t: int) -> StrategyEntry:
        i = self.deviator(profile)
        if i is None:
            return super().__call__(profile, t)
        choices = self.game.agent_choice_set(profile.menus, t)
        worst = min(self.game.u(i, c, t) for c in choices)
        pick = next(c for c in choices if self.game.u(i, c, t) == worst)
        return StrategyEntry(((pick, Fraction(1)),), self.policy)


@dataclass
class StrategyAudit:
    passed: bool
    violations: List[Tuple[MenuProfile, int, Choice]] = field(default_factory=list)
    nodes: int = 0

    def to_dict(self, game: FiniteGame) -> dict:
        return {
            "passed": self.passed,
            "nodes": self.nodes,
            "violations": [
                {"profile": p.to_dict(game), "type": game.types[t], "choice": _choice_dict(c)}
                for p, t, c in self.violations
            ],
        }


@dataclass
class EquilibriumCertificate:
    profile: MenuProfile
    strategy: AgentStrategy
    payoffs: List[Fraction]
    deviations: List[dict]
    audit: StrategyAudit
    verdict: str = "PBE"

    @property
    def is_pbe(self) -> bool:
        return self.verdict == "PBE"

    def profitable(self) -> List[dict]:
        return [d for d in self.deviations if d["profitable"]]

    def to_frame(self, game: FiniteGame) -> pd.DataFrame:
        rows = []
        for d in self.deviations:
            rows.append({
                "principal": game.principals[d["principal"]],
                "menu": list(game.sorted_menu(d["principal"], d["menu"])),
                "payoff": format_rational(d["payoff"]),
                "equilibrium": format_rational(self.payoffs[d["principal"]]),
                "profitable": d["profitable"],
            })
        return pd.DataFrame(rows)

    def to_dict(self, game: FiniteGame) -> dict:
        return {
            "verdict": self.verdict,
            "profile": self.profile.to_dict(game),
            "payoffs": {p: format_rational(x) for p, x in zip(game.principals, self.payoffs)},
            "deviations": self.to_frame(game).to_dict(orient="records"),
            "agent_audit": self.audit.to_dict(game),
            "strategy": self.strategy.to_dict(game),
        }


@dataclass
class FeasibilitySystem:
    """Variables de départage aux noeuds d'indifférence + contraintes d'équilibre."""

    system: LinearSystem
    nodes: Dict[Node, Tuple[List[Choice], Optional[List[int]]]]
    on_path: MenuProfile

    def weights(self, node: Node, x: Sequence[Fraction]) -> List[Tuple[Choice, Fraction]]:
        choices, variables = self.nodes[node]
        if variables is None:
            return [(choices[0], Fraction(1))]
        free = [x[k] for k in variables]
        return list(zip(choices, free + [1 - sum(free, Fraction(0))]))

    def coefficients(self, game: FiniteGame, i: int, node: Node) -> Tuple[Dict[int, Fraction], Fraction]:
        """u_i espéré au noeud, affine en ses variables: (coefficients, constante)."""
        (_, t) = node
        choices, variables = self.nodes[node]
        values = [game.u(i, c, t) for c in choices]
        if variables is None:
            return {}, values[0]
        last = values[-1]
        return {k: values[j] - last for j, k in enumerate(variables)}, last


@dataclass
class FeasibilityReport:
    feasible: bool
    system: FeasibilitySystem
    result: EliminationResult
    strategy: Optional[AgentStrategy] = None

    def to_dict(self, game: FiniteGame) -> dict:
        out = {
            "feasible": self.feasible,
            "variables": self.system.system.names,
            "constraints": [
                f"{label}: {self.system.system.describe(row)}"
                for label, row in zip(self.system.system.labels, self.system.system.rows)
            ],
            "trace": self.result.trace,
        }
        if self.feasible:
            out["witness"] = {n: format_rational(v) for n, v in zip(self.system.system.names, self.result.witness)}
            out["strategy"] = self.strategy.to_dict(game) if self.strategy else None
        else:
            bad = self.result.contradiction
            out["contradiction"] = {
                "bound": format_rational(bad.bound),
                "multipliers": [
                    {"constraint": self.system.system.labels[j], "weight": format_rational(m)}
                    for j, m in bad.multipliers if m != 0
                ],
            }
        return out


@dataclass
class IIAReport:
    variant: str
    passed: bool
    violation: Optional[dict] = None
    pairs: int = 0

    def to_dict(self, game: FiniteGame) -> dict:
        out = {"variant": self.variant, "passed": self.passed, "pairs": self.pairs}
        if self.violation is not None:
            v = self.violation
            out["violation"] = {
                "smaller": v["smaller"].to_dict(game),
                "larger": v["larger"].to_dict(game),
                "type": game.types[v["type"]],
                "subset": [_choice_dict(c) for c in v["subset"]],
            }
        return out


def _expected(game: FiniteGame, i: int, strategy: AgentStrategy, profile: MenuProfile) -> Fraction:
    return GameModelAgent().expected_principal_payoff(game, i, strategy, profile)


def _deviation_worker(game: FiniteGame, strategy: AgentStrategy, profile: MenuProfile, key: Tuple[int, frozenset]):
    i, menu = key
    return i, menu, _expected(game, i, strategy, profile.replace(i, menu))


def _contained(game: FiniteGame, choice: Choice, profile: MenuProfile) -> bool:
    if choice == QUIT:
        return True
    menus = game.effective_menus(profile.menus)
    return all(o in menu for o, menu in zip(choice, menus))


class VerifierAgent:
    def __init__(self, settings: Settings = DEFAULT_SETTINGS):
        """Agent de vérification des PBE et de faisabilité des stratégies de soutien."""
        self.settings = settings

    def _deviation_menus(self, game: FiniteGame, profile: MenuProfile) -> List[Tuple[int, frozenset]]:
        keys = []
        for i in range(game.n):
            for menu in game.all_menus(i):
                menu = frozenset(menu)
                if menu != profile.menus[i]:
                    keys.append((i, menu))
        return keys

    # ============================================
    # Stratégie de l'agent
    # ============================================

    def construct_agent_strategy(self, game: FiniteGame, mechanisms: Sequence[DirectMechanism],
                                 variant: Optional[str] = None) -> AgentStrategy:
        """
        Stratégie de soutien: témoin UPR sur le chemin, adversaire du déviant ailleurs.

        Args:
            game: le jeu
            mechanisms: un mécanisme par principal
            variant: variante de compatibilité (défaut selon le mode du jeu)

        Returns:
            AgentStrategy (entrées sur le chemin + règle de repli)
        """
        from app.assembly_agent import AssemblyAgent

        report = AssemblyAgent(self.settings).check_compatibility(game, mechanisms, variant)
        if not report.passed:
            raise PreconditionError(
                f"{report.variant} en échec au type {game.types[report.violation['type']]}: "
                "aucune affectation sur le chemin"
            )
        mechanisms = sorted(mechanisms, key=lambda m: m.principal)
        profile = MenuProfile.from_mechanisms(mechanisms)
        strategy = AgentStrategy(fallback=AdversarialRule(game, profile))
        for t in range(len(game.types)):
            intended = tuple(m.assignment[t] for m in mechanisms)
            witness = report.witnesses[t]
            if QUIT not in intended and intended in game.agent_choice_set(profile.menus, t):
                witness = intended
            strategy.set(profile, t, [(witness, Fraction(1))], policy="on-path-UPR")
        return strategy

    def audit_agent_strategy(self, game: FiniteGame, strategy: AgentStrategy,
                             profiles: Sequence[MenuProfile]) -> StrategyAudit:
        """Condition (1)/(1I)/(1D) à chaque noeud (profil, type) demandé."""
        violations = []
        nodes = 0
        for profile in profiles:
            for t in range(len(game.types)):
                nodes += 1
                allowed = game.agent_choice_set(profile.menus, t)
                for choice in strategy.at(profile, t).support():
                    if choice not in allowed:
                        violations.append((profile, t, choice))
        return StrategyAudit(not violations, violations, nodes)

    # ============================================
    # Vérification
    # ============================================

    def verify_pbe(self, game: FiniteGame, profile: MenuProfile, strategy: AgentStrategy) -> EquilibriumCertificate:
        """
        Vérifie la définition du PBE par énumération de toutes les déviations pures.

        Args:
            game: le jeu
            profile: profil de menus candidat
            strategy: stratégie de l'agent (définie sur le chemin et aux déviations unilatérales)

        Returns:
            EquilibriumCertificate
        """
        profile.validate(game)
        keys = self._deviation_menus(game, profile)
        audit = self.audit_agent_strategy(game, strategy, [profile] + [profile.replace(i, m) for i, m in keys])
        payoffs = [_expected(game, i, strategy, profile) for i in range(game.n)]
        results = parallel_map(partial(_deviation_worker, game, strategy, profile), keys, self.settings.jobs)
        deviations = [
            {"principal": i, "menu": menu, "payoff": value, "profitable": value > payoffs[i]}
            for i, menu, value in results
        ]
        verdict = "PBE"
        if not audit.passed:
            verdict = "agent-non-optimal"
        elif any(d["profitable"] for d in deviations):
            verdict = "profitable-deviation"
        cert = EquilibriumCertificate(profile, strategy, payoffs, deviations, audit, verdict)
        if cert.is_pbe:
            logger.info(f"✓ PBE vérifié ({len(deviations)} déviations examinées)")
        else:
            logger.info(f"✗ Pas un PBE: {verdict}")
        return cert

    def build_feasibility_system(self, game: FiniteGame, profile: MenuProfile) -> FeasibilitySystem:
        """
        Variables libres aux noeuds où le départage change un paiement pertinent.

        Args:
            game: le jeu
            profile: profil de menus candidat

        Returns:
            FeasibilitySystem
        """
        profile.validate(game)
        keys = self._deviation_menus(game, profile)
        names: List[str] = []
        nodes: Dict[Node, Tuple[List[Choice], Optional[List[int]]]] = {}

        def declare(node: Node, relevant: Sequence[int]) -> None:
            prof, t = node
            choices = game.agent_choice_set(prof.menus, t)
            distinct = any(len({game.u(i, c, t) for c in choices}) > 1 for i in relevant)
            if len(choices) < 2 or not distinct:
                nodes[node] = (choices, None)
                return
            variables = []
            for c in choices[:-1]:
                label = "quit" if c == QUIT else ",".join(c)
                names.append(f"w[{self._node_label(game, prof)}|{game.types[t]}|{label}]")
                variables.append(len(names) - 1)
            nodes[node] = (choices, variables)

        for t in range(len(game.types)):
            declare((profile, t), range(game.n))
        for i, menu in keys:
            for t in range(len(game.types)):
                declare((profile.replace(i, menu), t), [i])
        if len(names) > self.settings.fm_variable_bound:
            raise BoundExceededError(f"{len(names)} variables libres > {self.settings.fm_variable_bound}")

        system = LinearSystem(names)
        fs = FeasibilitySystem(system, nodes, profile)
        for node, (choices, variables) in nodes.items():
            if variables is None:
                continue
            label = f"simplexe {self._node_label(game, node[0])}|{game.types[node[1]]}"
            for k in variables:
                system.add_ge({k: Fraction(1)}, Fraction(0), f"{label}: {names[k]} ≥ 0")
            system.add_le({k: Fraction(1) for k in variables}, Fraction(1), f"{label}: Σ ≤ 1")

        for i, menu in keys:
            deviated = profile.replace(i, menu)
            coeffs: Dict[int, Fraction] = {}
            constant = Fraction(0)
            for t, prob in enumerate(game.probs):
                on, c_on = fs.coefficients(game, i, (profile, t))
                off, c_off = fs.coefficients(game, i, (deviated, t))
                for k, v in on.items():
                    coeffs[k] = coeffs.get(k, Fraction(0)) + prob * v
                for k, v in off.items():
                    coeffs[k] = coeffs.get(k, Fraction(0)) - prob * v
                constant += prob * (c_on - c_off)
            menu_label = "{" + ",".join(game.sorted_menu(i, menu)) + "}"
            system.add_ge(coeffs, -constant, f"principal {game.principals[i]} vs {menu_label}")
        return fs

    def _node_label(self, game: FiniteGame, profile: MenuProfile) -> str:
        return "/".join("{" + ",".join(game.sorted_menu(i, m)) + "}" for i, m in enumerate(profile.menus))

    def support_feasibility(self, game: FiniteGame, profile: MenuProfile) -> FeasibilityReport:
        """
        Existe-t-il une stratégie de l'agent qui fait du profil un PBE ?

        Args:
            game: le jeu
            profile: profil de menus candidat

        Returns:
            FeasibilityReport (témoin et stratégie, ou contradiction certifiée)
        """
        fs = self.build_feasibility_system(game, profile)
        result = FourierMotzkin(self.settings.fm_variable_bound).solve(fs.system)
        if not result.feasible:
            logger.info(f"✗ Aucune stratégie de soutien ({len(fs.system.names)} variables)")
            return FeasibilityReport(False, fs, result)
        strategy = AgentStrategy(fallback=AdversarialRule(game, profile))
        for node in fs.nodes:
            prof, t = node
            policy = "on-path-UPR" if prof == profile else "adversarial-to-deviator"
            weights = [(c, w) for c, w in fs.weights(node, result.witness) if w != 0]
            strategy.set(prof, t, weights, policy=policy)
        logger.info("✓ Stratégie de soutien trouvée")
        return FeasibilityReport(True, fs, result, strategy)

    # ============================================
    # Indépendance des alternatives non pertinentes
    # ============================================

    def _default_profiles(self, game: FiniteGame) -> List[MenuProfile]:
        spaces = [[frozenset(m) for m in game.all_menus(i)] for i in range(game.n)]
        size = 1
        for space in spaces:
            size *= len(space)
        if size > self.settings.profile_bound:
            raise BoundExceededError(f"{size} profils > {self.settings.profile_bound}")
        return [MenuProfile(combo) for combo in itertools.product(*spaces)]

    def check_iia(self, strategy: AgentStrategy, game: FiniteGame, variant: str = "IIA-1",
                  profiles: Optional[Sequence[MenuProfile]] = None) -> IIAReport:
        """
        Contrôle IIA-1 (stratégie pure) ou IIA-2 (renormalisation) sur les paires emboîtées.

        Args:
            strategy: stratégie de l'agent
            game: le jeu
            variant: "IIA-1" ou "IIA-2"
            profiles: sous-treillis fini à comparer (défaut: tous les profils)

        Returns:
            IIAReport (première violation (𝓜′, 𝓜, t, E) le cas échéant)
        """
        variant = variant.upper()
        if variant not in ("IIA-1", "IIA-2"):
            raise GameInputError(f"variante inconnue: {variant}")
        profiles = list(profiles) if profiles is not None else self._default_profiles(game)
        pairs = 0
        for larger, smaller in itertools.permutations(profiles, 2):
            if not all(s <= m for s, m in zip(smaller.menus, larger.menus)):
                continue
            pairs += 1
            for t in range(len(game.types)):
                big = strategy.at(larger, t)
                small = strategy.at(smaller, t)
                violation = self._iia_violation(game, variant, big, small, smaller)
                if violation is not None:
                    logger.debug(f"✗ {variant} violée au type {game.types[t]}")
                    return IIAReport(variant, False, {"smaller": smaller, "larger": larger, "type": t,
                                                      "subset": violation}, pairs)
        return IIAReport(variant, True, pairs=pairs)

    def _iia_violation(self, game: FiniteGame, variant: str, big: StrategyEntry, small: StrategyEntry,
                       smaller: MenuProfile) -> Optional[List[Choice]]:
        inside = [c for c in big.support() if _contained(game, c, smaller)]
        if variant == "IIA-1":
            if not big.pure:
                raise GameInputError("IIA-1 ne s'applique qu'aux stratégies pures")
            if inside and small.support() != inside:
                return inside
            return None
        if not inside:
            return None
        weight_big = dict((c, w) for c, w in big.distribution)
        weight_small = dict((c, w) for c, w in small.distribution)
        total = sum((weight_big[c] for c in inside), Fraction(0))
        if any(c not in inside for c in small.support()):
            return [c for c in small.support() if c not in inside]
        for size in range(1, len(inside) + 1):
            for subset in itertools.combinations(inside, size):
                lhs = sum((weight_small.get(c, Fraction(0)) for c in subset), Fraction(0))
                rhs = sum((weight_big[c] for c in subset), Fraction(0)) / total
                if lhs != rhs:
                    return list(subset)
        return None


if __name__ == "__main__":
    from pathlib import Path

    fixtures = Path(__file__).resolve().parent.parent / "fixtures"
    model = GameModelAgent()
    for p in ("4/5", "81/100"):
        game = model.load_game(fixtures / "e1.json", params={"p": p})
        profile = MenuProfile.of([{"a", "a'"}, {"b", "b'"}])
        report = VerifierAgent().support_feasibility(game, profile)
        print(f"p={p}: {'✓ faisable' if report.feasible else '✗ infaisable'}")
