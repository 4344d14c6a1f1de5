"""
Assemblage des mécanismes optimaux en candidats d'équilibre.

- check_compatibility: conditions UPR, UPR-I, UPR-D, UPNR et MEN
- check_sufficiency: non-indifférence, séparabilité, structure singleton
- find_p3_induced_profiles / best_response_iteration
- classify_pbe, pareto_compare
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
from app.game_model import QUIT, AgentStrategy, Choice, DirectMechanism, FiniteGame, GameModelAgent, MenuProfile, format_rational
from app.log import get_logger
from app.screening_agent import MENU_METHOD_LIMIT, ScreeningAgent, ScreeningProblem
from app.workers import parallel_map

logger = get_logger(__name__)

VARIANTS = ("UPR", "UPR-I", "UPR-D", "UPNR", "MEN")


def _choice_dict(choice: Choice):
    return QUIT if choice == QUIT else list(choice)


@dataclass
class CompatibilityReport:
    variant: str
    passed: bool
    witnesses: Dict[int, Choice] = field(default_factory=dict)
    violation: Optional[dict] = None
    men: Optional[List[dict]] = None

    def to_dict(self, game: FiniteGame) -> dict:
        out = {
            "variant": self.variant,
            "status": "pass" if self.passed else "fail",
            "witnesses": {game.types[t]: _choice_dict(c) for t, c in self.witnesses.items()},
        }
        if self.violation is not None:
            v = self.violation
            out["violation"] = {
                "type": game.types[v["type"]],
                "agent_optimal": [_choice_dict(c) for c in v["agent_optimal"]],
                "gaps": [[format_rational(g) for g in row] for row in v["gaps"]],
                "reason": v.get("reason"),
            }
        if self.men is not None:
            out["men"] = [
                {"principal": game.principals[r["principal"]], "full": format_rational(r["full"]),
                 "singletons": format_rational(r["singletons"])}
                for r in self.men
            ]
        return out


@dataclass
class SufficiencyFlags:
    non_indifference_global: bool
    non_indifference_profile: Optional[bool]
    additive_separable: bool
    weakly_separable: bool
    singleton_structure: Optional[bool] = None
    quit_alignment: Optional[bool] = None
    decomposition: Optional[Dict[Tuple[int, str, int], Fraction]] = None

    def to_dict(self, game: FiniteGame) -> dict:
        out = {
            "non_indifference": {"global": self.non_indifference_global, "profile": self.non_indifference_profile},
            "additive_separable": self.additive_separable,
            "weakly_separable": self.weakly_separable,
            "singleton_structure": self.singleton_structure,
            "quit_alignment": self.quit_alignment,
        }
        if self.decomposition is not None:
            out["decomposition"] = [
                {"principal": game.principals[i], "outcome": o, "type": game.types[t], "value": format_rational(v)}
                for (i, o, t), v in self.decomposition.items()
            ]
        return out


@dataclass
class P3Profile:
    mechanisms: List[DirectMechanism]
    menus: MenuProfile
    report: CompatibilityReport

    @property
    def passed(self) -> bool:
        return self.report.passed

    def to_dict(self, game: FiniteGame) -> dict:
        return {
            "menus": self.menus.to_dict(game),
            "mechanisms": [m.to_dict(game) for m in self.mechanisms],
            "compatibility": self.report.to_dict(game),
        }


@dataclass
class IterationResult:
    converged: bool
    profile: MenuProfile
    history: List[MenuProfile]
    cycle: List[MenuProfile] = field(default_factory=list)
    rounds: int = 0

    def to_dict(self, game: FiniteGame) -> dict:
        return {
            "converged": self.converged,
            "rounds": self.rounds,
            "profile": self.profile.to_dict(game),
            "history": [p.to_dict(game) for p in self.history],
            "cycle": [p.to_dict(game) for p in self.cycle],
        }


@dataclass
class ClassificationReport:
    p3_induced: bool
    unused_items: Dict[int, List[str]]
    heuristic: bool = False

    def to_dict(self, game: FiniteGame) -> dict:
        return {
            "p3_induced": self.p3_induced,
            "unused_items": {game.principals[i]: items for i, items in self.unused_items.items()},
            "heuristic": self.heuristic,
        }


@dataclass
class ParetoReport:
    payoffs: List[Tuple[Fraction, ...]]
    dominance: List[Tuple[int, int]]
    frontier: List[int]
    single_type: bool
    peaked_principals: List[int]
    verdicts: Optional[List[bool]] = None

    def to_frame(self, game: FiniteGame) -> pd.DataFrame:
        rows = []
        for k, vec in enumerate(self.payoffs):
            row = {"entry": k, "frontier": k in self.frontier}
            row.update({f"u_{p}": format_rational(x) for p, x in zip(game.principals, vec)})
            rows.append(row)
        return pd.DataFrame(rows)

    def to_dict(self, game: FiniteGame) -> dict:
        return {
            "payoffs": [[format_rational(x) for x in vec] for vec in self.payoffs],
            "dominance": [{"dominant": a, "dominated": b} for a, b in self.dominance],
            "frontier": self.frontier,
            "prop_flags": {
                "single_type": self.single_type,
                "type_independent_peaked": [game.principals[i] for i in self.peaked_principals],
                "frontier_is_pareto_optimal": self.single_type or (game.n == 2 and bool(self.peaked_principals)),
            },
            "verdicts": self.verdicts,
        }


def _screening_worker(game: FiniteGame, settings: Settings, key: Tuple[int, Tuple[frozenset, ...]]):
    i, rivals = key
    agent = ScreeningAgent(settings.model_copy(update={"jobs": 1}))
    size = len(game.outcomes[i])
    method = "menus" if 2 ** size <= MENU_METHOD_LIMIT else "search"
    cap = max(settings.solution_cap, 2 ** size) if method == "menus" else settings.solution_cap
    solution = agent.solve_screening(ScreeningProblem(game, i, MenuProfile(rivals)), method=method, cap=cap)
    return key, solution


class AssemblyAgent:
    def __init__(self, settings: Settings = DEFAULT_SETTINGS):
        """Agent d'assemblage: compatibilité, suffisance, profils induits, Pareto."""
        self.settings = settings
        self.screening = ScreeningAgent(settings)

    # ============================================
    # Compatibilité
    # ============================================

    def default_variant(self, game: FiniteGame) -> str:
        return {"intrinsic": "UPR-I", "delegated": "UPR-D"}.get(game.mode, "UPR")

    def check_compatibility(self, game: FiniteGame, mechanisms: Sequence[DirectMechanism], variant: Optional[str] = None,
                            strategy: Optional[AgentStrategy] = None) -> CompatibilityReport:
        """
        Recherche, type par type, d'une recombinaison préservant les utilités.

        Args:
            game: le jeu
            mechanisms: un mécanisme par principal
            variant: UPR, UPR-I, UPR-D, UPNR ou MEN (défaut: selon les options extérieures)
            strategy: stratégie de l'agent (requise pour MEN)

        Returns:
            CompatibilityReport
        """
        variant = (variant or self.default_variant(game)).upper()
        if variant not in VARIANTS:
            raise GameInputError(f"variante inconnue: {variant}")
        if variant == "UPR-I" and not game.intrinsic:
            raise GameInputError("UPR-I requiert des options extérieures intrinsèques")
        if variant == "UPR-D" and not game.delegated:
            raise GameInputError("UPR-D requiert des options extérieures déléguées")
        if variant == "UPR" and game.outside_kind is not None:
            raise GameInputError(f"jeu avec options extérieures: utiliser {self.default_variant(game)}")
        mechanisms = sorted(mechanisms, key=lambda m: m.principal)
        if [m.principal for m in mechanisms] != list(range(game.n)):
            raise GameInputError("un mécanisme par principal requis")
        for m in mechanisms:
            m.validate(game)
        if variant == "MEN":
            return self._check_men(game, mechanisms, strategy)

        menus = [m.menu() for m in mechanisms]
        witnesses: Dict[int, Choice] = {}
        for t in range(len(game.types)):
            intended = tuple(m.assignment[t] for m in mechanisms)
            all_quit = all(o == QUIT for o in intended)
            if game.principal_mode == "independent":
                targets = [game.u_own(i, o, t) for i, o in enumerate(intended)]
            else:
                targets = [game.u(i, QUIT if QUIT in intended else intended, t) for i in range(game.n)]
            choices = game.agent_choice_set(menus, t)
            if choices == [QUIT]:
                # max négatif: tous les principaux doivent assigner quit
                if all_quit:
                    witnesses[t] = QUIT
                    continue
                return CompatibilityReport(variant, False, witnesses,
                                           self._violation(game, t, choices, targets, "max négatif: quit requis pour tous"))
            if variant == "UPNR":
                target = QUIT if all_quit else intended
                if target in choices:
                    witnesses[t] = target
                    continue
                return CompatibilityReport(variant, False, witnesses,
                                           self._violation(game, t, choices, targets, "profil visé non optimal"))
            found = next(
                (c for c in choices if all(game.u(i, c, t) == targets[i] for i in range(game.n))),
                None,
            )
            if found is None:
                return CompatibilityReport(variant, False, witnesses,
                                           self._violation(game, t, choices, targets, "aucune recombinaison"))
            witnesses[t] = found
        logger.debug(f"✓ {variant} satisfaite")
        return CompatibilityReport(variant, True, witnesses)

    def _violation(self, game: FiniteGame, t: int, choices: List[Choice], targets: List[Fraction], reason: str) -> dict:
        gaps = [[game.u(i, c, t) - targets[i] for i in range(game.n)] for c in choices]
        logger.debug(f"✗ Compatibilité en échec au type {game.types[t]}: {reason}")
        return {"type": t, "agent_optimal": choices, "gaps": gaps, "reason": reason}

    def _check_men(self, game: FiniteGame, mechanisms: Sequence[DirectMechanism],
                   strategy: Optional[AgentStrategy]) -> CompatibilityReport:
        if strategy is None:
            raise GameInputError("MEN requiert une stratégie de l'agent")
        profile = MenuProfile.from_mechanisms(mechanisms)
        payoff = GameModelAgent().expected_principal_payoff
        rows, passed = [], True
        for i, mech in enumerate(mechanisms):
            full = payoff(game, i, strategy, profile)
            singletons = Fraction(0)
            for t, prob in enumerate(game.probs):
                if mech.assignment[t] == QUIT:
                    continue
                entry = strategy.at(profile.replace(i, {mech.assignment[t]}), t)
                singletons += prob * sum((w * game.u(i, c, t) for c, w in entry.distribution), Fraction(0))
            rows.append({"principal": i, "full": full, "singletons": singletons})
            passed = passed and full >= singletons
        return CompatibilityReport("MEN", passed, men=rows)

    # ============================================
    # Conditions suffisantes
    # ============================================

    def _non_indifferent(self, game: FiniteGame, menus: Sequence[Sequence[str]]) -> bool:
        for t in range(len(game.types)):
            values = [game.V(o, t) for o in itertools.product(*menus)]
            if len(set(values)) != len(values):
                return False
        return True

    def additive_decomposition(self, game: FiniteGame) -> Optional[Dict[Tuple[int, str, int], Fraction]]:
        """
        Décomposition exacte V = Σ v^i(o_i,t), ou None.

        Le profil de référence r = premiers résultats déclarés; v^i(r_i,t) = 0
        pour tout i sauf le dernier, qui absorbe la constante.
        """
        ref = tuple(outs[0] for outs in game.outcomes)
        last = game.n - 1
        parts: Dict[Tuple[int, str, int], Fraction] = {}
        for t in range(len(game.types)):
            base = game.V(ref, t)
            for i in range(game.n):
                for o in game.outcomes[i]:
                    value = game.V(ref[:i] + (o,) + ref[i + 1:], t)
                    parts[(i, o, t)] = value if i == last else value - base
            for profile in itertools.product(*game.outcomes):
                total = sum((parts[(i, o, t)] for i, o in enumerate(profile)), Fraction(0))
                if total != game.V(profile, t):
                    return None
        return parts

    def weakly_separable(self, game: FiniteGame) -> bool:
        for t in range(len(game.types)):
            for i in range(game.n):
                rivals = [outs for j, outs in enumerate(game.outcomes) if j != i]
                rests = list(itertools.product(*rivals))

                def V(o: str, rest: tuple) -> Fraction:
                    return game.V(rest[:i] + (o,) + rest[i:], t)

                for o, o2 in itertools.permutations(game.outcomes[i], 2):
                    strict = [V(o, r) > V(o2, r) for r in rests]
                    if any(strict) and not all(strict):
                        return False
        return True

    def check_sufficiency(self, game: FiniteGame, profile: Optional[MenuProfile] = None,
                          mechanisms: Optional[Sequence[DirectMechanism]] = None) -> SufficiencyFlags:
        """
        Évalue les conditions suffisantes de compatibilité.

        Args:
            game: le jeu
            profile: profil de menus (optionnel)
            mechanisms: mécanismes (optionnel, prioritaires sur profile)

        Returns:
            SufficiencyFlags
        """
        if mechanisms is not None:
            profile = MenuProfile.from_mechanisms(mechanisms)
        decomposition = self.additive_decomposition(game)
        flags = SufficiencyFlags(
            non_indifference_global=self._non_indifferent(game, game.outcomes),
            non_indifference_profile=None,
            additive_separable=decomposition is not None,
            weakly_separable=decomposition is not None or self.weakly_separable(game),
            decomposition=decomposition,
        )
        if profile is not None:
            menus = game.effective_menus([m for m in profile.menus])
            flags.non_indifference_profile = self._non_indifferent(game, menus)
            flags.singleton_structure = sum(1 for m in profile.menus if len(m) == 1) >= game.n - 1
        if mechanisms is not None and game.intrinsic:
            quit_sets = {m.quit_types() for m in mechanisms}
            flags.quit_alignment = bool(flags.singleton_structure) and len(quit_sets) == 1
        return flags

    # ============================================
    # Profils induits
    # ============================================

    def _menu_space(self, game: FiniteGame, i: int) -> List[frozenset]:
        return [frozenset(m) for m in game.all_menus(i, len(game.types))]

    def _optimal_menus(self, game: FiniteGame, keys) -> Dict:
        results = parallel_map(partial(_screening_worker, game, self.settings), keys, self.settings.jobs)
        return dict(results)

    def find_p3_induced_profiles(self, game: FiniteGame, mode: str = "exhaustive",
                                 start: Optional[MenuProfile] = None, max_rounds: int = 100) -> List[P3Profile]:
        """
        Points fixes mutuels des programmes de screening, avec leur rapport UPR.

        Args:
            game: le jeu
            mode: "exhaustive" ou "iterate"
            start: profil initial (mode iterate)
            max_rounds: nombre maximal de tours (mode iterate)

        Returns:
            liste de P3Profile (tous les points fixes; `passed` indique la compatibilité)
        """
        if game.principal_mode != "independent":
            raise GameInputError("les profils induits requièrent des paiements indépendants")
        if mode == "iterate":
            result = self.best_response_iteration(game, start, max_rounds)
            if not result.converged:
                logger.warning("⚠ Itération sans point fixe (cycle ou limite de tours)")
                return []
            return [self._p3_profile(game, result.profile, {})]
        if mode != "exhaustive":
            raise GameInputError(f"mode inconnu: {mode!r}")

        spaces = [self._menu_space(game, i) for i in range(game.n)]
        size = 1
        for space in spaces:
            size *= len(space)
        if size > self.settings.profile_bound:
            raise BoundExceededError(f"{size} profils > {self.settings.profile_bound}: utiliser mode='iterate'")

        keys = []
        for i in range(game.n):
            rival_spaces = [space if j != i else [frozenset()] for j, space in enumerate(spaces)]
            keys.extend((i, combo) for combo in itertools.product(*rival_spaces))
        logger.info(f"🔍 {len(keys)} programmes de screening, {size} profils candidats")
        solutions = self._optimal_menus(game, keys)

        found: List[P3Profile] = []
        for combo in itertools.product(*spaces):
            mutual = True
            for i in range(game.n):
                key = (i, combo[:i] + (frozenset(),) + combo[i + 1:])
                if combo[i] not in solutions[key].menus:
                    mutual = False
                    break
            if mutual:
                found.append(self._p3_profile(game, MenuProfile(combo), solutions))
        found.sort(key=lambda p: p.menus.sort_key(game))
        logger.info(f"✓ {len(found)} profil(s) mutuel(s), {sum(p.passed for p in found)} compatible(s)")
        return found

    def _p3_profile(self, game: FiniteGame, profile: MenuProfile, solutions: Dict) -> P3Profile:
        mechanisms = []
        for i in range(game.n):
            key = (i, profile.menus[:i] + (frozenset(),) + profile.menus[i + 1:])
            solution = solutions.get(key) or _screening_worker(game, self.settings, key)[1]
            mechanisms.append(next(m for m in solution.mechanisms if m.menu() == profile.menus[i]))
        return P3Profile(mechanisms, profile, self.check_compatibility(game, mechanisms))

    def best_response_iteration(self, game: FiniteGame, start: Optional[MenuProfile] = None,
                                max_rounds: int = 100) -> IterationResult:
        """
        Meilleures réponses en tourniquet jusqu'au point fixe ou au premier cycle.

        Args:
            game: le jeu
            start: profil initial (défaut: premier résultat de chaque principal)
            max_rounds: nombre maximal de tours complets

        Returns:
            IterationResult
        """
        profile = start or MenuProfile.of([[outs[0]] for outs in game.outcomes])
        profile.validate(game)
        history = [profile]
        seen = {profile: 0}
        for rounds in range(1, max_rounds + 1):
            changed = False
            for i in range(game.n):
                key = (i, profile.menus[:i] + (frozenset(),) + profile.menus[i + 1:])
                solution = _screening_worker(game, self.settings, key)[1]
                options = [m for m in solution.menus if m]
                if not options:
                    logger.warning(f"⚠ Principal {game.principals[i]}: seule la sortie totale est optimale")
                    return IterationResult(False, profile, history, rounds=rounds)
                if profile.menus[i] not in options:
                    profile = profile.replace(i, options[0])
                    changed = True
            if not changed:
                return IterationResult(True, profile, history, rounds=rounds)
            if profile in seen:
                return IterationResult(False, profile, history, history[seen[profile]:], rounds)
            seen[profile] = len(history)
            history.append(profile)
        return IterationResult(False, profile, history, rounds=max_rounds)

    # ============================================
    # Classification et Pareto
    # ============================================

    def classify_pbe(self, game: FiniteGame, profile: MenuProfile, strategy: AgentStrategy,
                     strict: bool = True) -> ClassificationReport:
        """
        Un PBE est induit ssi chaque item de menu est choisi par un type sur le chemin.

        Args:
            game: le jeu
            profile: profil de menus d'équilibre
            strategy: stratégie d'équilibre de l'agent
            strict: refuse la classification sans non-indifférence

        Returns:
            ClassificationReport (items inutilisés = boucliers stratégiques)
        """
        heuristic = False
        if not self._non_indifferent(game, game.outcomes):
            if strict:
                raise PreconditionError("non-indifférence non satisfaite: classification refusée")
            logger.warning("⚠ Classification heuristique (non-indifférence absente)")
            heuristic = True
        used = [set() for _ in range(game.n)]
        for t in range(len(game.types)):
            for choice in strategy.at(profile, t).support():
                if choice != QUIT:
                    for i, o in enumerate(choice):
                        used[i].add(o)
        unused = {}
        for i, menu in enumerate(profile.menus):
            idle = [o for o in game.sorted_menu(i, menu) if o not in used[i]]
            if idle:
                unused[i] = idle
        return ClassificationReport(not unused, unused, heuristic)

    def type_independent_peaked(self, game: FiniteGame, i: int) -> bool:
        if game.principal_mode != "independent":
            return False
        peaks = set()
        for t in range(len(game.types)):
            best = max(game.u_own(i, o, t) for o in game.outcomes[i])
            peaks.add(tuple(o for o in game.outcomes[i] if game.u_own(i, o, t) == best))
        return len(peaks) == 1 and len(next(iter(peaks))) == 1

    def pareto_compare(self, game: FiniteGame, entries: Sequence[Tuple[MenuProfile, AgentStrategy]],
                       verify: bool = False) -> ParetoReport:
        """
        Vecteurs de paiements exacts, dominances et frontière parmi les entrées.

        Args:
            game: le jeu
            entries: liste (profil, stratégie)
            verify: vérifie aussi chaque entrée comme PBE

        Returns:
            ParetoReport
        """
        model = GameModelAgent()
        payoffs = [
            tuple(model.expected_principal_payoff(game, i, strategy, profile) for i in range(game.n))
            for profile, strategy in entries
        ]
        dominance = []
        for a, b in itertools.permutations(range(len(payoffs)), 2):
            pa, pb = payoffs[a], payoffs[b]
            if all(x >= y for x, y in zip(pa, pb)) and any(x > y for x, y in zip(pa, pb)):
                dominance.append((a, b))
        dominated = {b for _, b in dominance}
        verdicts = None
        if verify:
            from app.verifier_agent import VerifierAgent

            verifier = VerifierAgent(self.settings)
            verdicts = [verifier.verify_pbe(game, profile, strategy).is_pbe for profile, strategy in entries]
        return ParetoReport(
            payoffs=payoffs,
            dominance=dominance,
            frontier=[k for k in range(len(payoffs)) if k not in dominated],
            single_type=len(game.types) == 1,
            peaked_principals=[i for i in range(game.n) if self.type_independent_peaked(game, i)],
            verdicts=verdicts,
        )


if __name__ == "__main__":
    from pathlib import Path

    fixture = Path(__file__).resolve().parent.parent / "fixtures" / "upr-not-upnr.json"
    game = GameModelAgent().load_game(fixture)
    for found in AssemblyAgent().find_p3_induced_profiles(game):
        status = "✓" if found.passed else "✗"
        print(f"{status} {[m.assignment for m in found.mechanisms]}")
