"""
Programme de screening d'un principal face aux menus de ses rivaux.

Deux méthodes exactes:
- "menus": énumération des menus candidats S ⊆ O_i (cardinal puis ordre
  lexicographique), sélection favorable au principal dans l'argmax de
  l'agent, surjectivité décidée par couplage biparti.
- "search": séparation-évaluation sur les types, qui liste aussi les
  mécanismes optimaux ne différant que là où le principal est indifférent.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd

from app.config import DEFAULT_SETTINGS, Settings
from app.errors import BoundExceededError, GameInputError, InfeasibleError, PreconditionError
from app.game_model import QUIT, AgentStrategy, DirectMechanism, FiniteGame, MenuProfile, format_rational
from app.indirect_utility_agent import IndirectUtilityAgent
from app.log import get_logger
from app.workers import parallel_map

logger = get_logger(__name__)

MENU_METHOD_LIMIT = 4096


@dataclass(frozen=True)
class ScreeningProblem:
    game: FiniteGame
    principal: int
    rival_menus: MenuProfile
    objective: str = "independent"
    strategy: Optional[AgentStrategy] = None
    mode: Optional[str] = None

    def __post_init__(self):
        if self.mode is not None and self.mode != self.game.mode:
            raise GameInputError(f"mode {self.mode!r} incompatible avec les options du jeu ({self.game.mode})")
        if self.objective not in ("independent", "general"):
            raise GameInputError(f"objectif inconnu: {self.objective!r}")
        if self.objective == "general" and self.strategy is None:
            raise GameInputError("l'objectif général requiert une stratégie de l'agent")
        if self.objective == "independent" and self.game.principal_mode != "independent":
            raise GameInputError("jeu à paiements généraux: utiliser solve_screening_general")
        for j, menu in enumerate(self.rival_menus.menus):
            if j != self.principal and not menu:
                raise GameInputError(f"menu rival vide (principal {self.game.principals[j]})")

    @property
    def effective_mode(self) -> str:
        return self.game.mode


@dataclass
class ScreeningSolution:
    principal: int
    value: Fraction
    mechanisms: List[DirectMechanism]
    truncated: bool = False
    method: str = "menus"
    explored: int = 0

    @property
    def menus(self) -> List[frozenset]:
        return [m.menu() for m in self.mechanisms]

    def to_frame(self, game: FiniteGame) -> pd.DataFrame:
        rows = []
        for rank, mech in enumerate(self.mechanisms):
            row = {"rank": rank, "menu": list(game.sorted_menu(mech.principal, mech.menu()))}
            row.update({game.types[t]: o for t, o in enumerate(mech.assignment)})
            rows.append(row)
        return pd.DataFrame(rows)

    def to_dict(self, game: FiniteGame) -> dict:
        return {
            "principal": game.principals[self.principal],
            "value": format_rational(self.value),
            "method": self.method,
            "truncated": self.truncated,
            "explored": self.explored,
            "mechanisms": [m.to_dict(game) for m in self.mechanisms],
        }


# ============================================
# Tables entières (comparaisons exactes et rapides)
# ============================================

@dataclass
class _Tables:
    """v, u et poids mis à l'échelle entière; l'indice K représente quit."""

    items: Tuple[str, ...]
    v: List[List[int]]
    u: List[List[int]]
    p: List[int]
    threshold: List[Optional[int]]
    intrinsic: bool
    scale: int  # valeur réelle = somme entière / scale

    @property
    def quit_index(self) -> int:
        return len(self.items)


def _lcm_of(values) -> int:
    out = 1
    for x in values:
        out = math.lcm(out, Fraction(x).denominator)
    return out


def _build_tables(problem: ScreeningProblem) -> _Tables:
    game, i = problem.game, problem.principal
    table = IndirectUtilityAgent().indirect_utility(game, i, problem.rival_menus, augment=game.delegated)
    items = game.outcomes[i]
    T = range(len(game.types))
    raw_v = [[table.value(o, t) for o in items] for t in T]
    raw_thr = [table.value(game.outside_options[i], t) if game.delegated else None for t in T]
    raw_u = [[game.u_own(i, o, t) for o in items] for t in T]
    lv = _lcm_of([x for row in raw_v for x in row] + [x for x in raw_thr if x is not None])
    lu = _lcm_of([x for row in raw_u for x in row])
    lp = _lcm_of(game.probs)
    v = [[int(x * lv) for x in row] + ([0] if game.intrinsic else []) for row in raw_v]
    u = [[int(x * lu) for x in row] + ([0] if game.intrinsic else []) for row in raw_u]
    return _Tables(
        items=items,
        v=v,
        u=u,
        p=[int(x * lp) for x in game.probs],
        threshold=[None if x is None else int(x * lv) for x in raw_thr],
        intrinsic=game.intrinsic,
        scale=lu * lp,
    )


def _match_items(menu: Sequence[int], candidates: List[List[int]]) -> Optional[Dict[int, int]]:
    """Couplage (Kuhn) saturant le menu: item -> type distinct qui l'accepte."""
    owner: Dict[int, int] = {}

    def augment(item: int, seen: set) -> bool:
        for t, cands in enumerate(candidates):
            if item in cands and t not in seen:
                seen.add(t)
                if t not in owner or augment(owner[t], seen):
                    owner[t] = item
                    return True
        return False

    for item in menu:
        if not augment(item, set()):
            return None
    return owner


def _evaluate_menu(tables: _Tables, menu: Tuple[int, ...]) -> Optional[Tuple[int, Tuple[int, ...]]]:
    """Sélection favorable au principal, de portée exactement `menu`; None si irréalisable."""
    q = tables.quit_index
    candidates: List[List[int]] = []
    total = 0
    for t, row in enumerate(tables.v):
        if menu:
            m = max(row[k] for k in menu)
            argmax = [k for k in menu if row[k] == m]
        else:
            m, argmax = None, []
        if tables.threshold[t] is not None and m < tables.threshold[t]:
            return None
        if tables.intrinsic:
            if m is None or m < 0:
                argmax = [q]
            elif m == 0:
                argmax = argmax + [q]
        best = max(tables.u[t][k] for k in argmax)
        candidates.append([k for k in argmax if tables.u[t][k] == best])
        total += tables.p[t] * best
    owner = _match_items(menu, candidates)
    if owner is None:
        return None
    assignment = []
    for t, cands in enumerate(candidates):
        if t in owner:
            assignment.append(owner[t])
        else:
            items = [k for k in cands if k != q]
            assignment.append(items[0] if items else q)
    return total, tuple(assignment)


def _menu_worker(tables: _Tables, menu: Tuple[int, ...]):
    return menu, _evaluate_menu(tables, menu)


def _compatible(tables: _Tables, t: int, k: int, s: int, j: int) -> bool:
    """Contraintes IC croisées entre (t -> k) et (s -> j)."""
    return tables.v[t][k] >= tables.v[t][j] and tables.v[s][j] >= tables.v[s][k]


class ScreeningAgent:
    def __init__(self, settings: Settings = DEFAULT_SETTINGS):
        """Agent de résolution des programmes de screening à un principal."""
        self.settings = settings

    def _mechanism(self, problem: ScreeningProblem, tables: _Tables, assignment: Sequence[int]) -> DirectMechanism:
        labels = tuple(QUIT if k == tables.quit_index else tables.items[k] for k in assignment)
        return DirectMechanism(problem.principal, labels)

    def _menu_space(self, problem: ScreeningProblem) -> List[Tuple[int, ...]]:
        game = problem.game
        size = len(game.outcomes[problem.principal])
        top = min(size, len(game.types))
        menus: List[Tuple[int, ...]] = [()] if game.intrinsic else []
        for k in range(1, top + 1):
            menus.extend(itertools.combinations(range(size), k))
        return menus

    def optimal_for_menu(self, problem: ScreeningProblem, menu: Sequence[str]) -> Optional[DirectMechanism]:
        """
        Sélection favorable au principal de portée exactement S.

        Args:
            problem: programme de screening
            menu: menu candidat S (non vide)

        Returns:
            DirectMechanism, ou None si irréalisable (portée ≠ S ou IR violée)
        """
        game, i = problem.game, problem.principal
        if not menu:
            raise GameInputError("menu candidat vide")
        tables = _build_tables(problem)
        indices = tuple(sorted(game.order(i, o) for o in set(menu)))
        result = _evaluate_menu(tables, indices)
        if result is None:
            return None
        return self._mechanism(problem, tables, result[1])

    def solve_screening(self, problem: ScreeningProblem, method: str = "auto", cap: Optional[int] = None) -> ScreeningSolution:
        """
        Résout le programme de screening du principal i.

        Args:
            problem: programme (jeu, principal, menus rivaux)
            method: "menus", "search" ou "auto"
            cap: nombre maximal de mécanismes optimaux listés

        Returns:
            ScreeningSolution (valeur optimale exacte et mécanismes optimaux)
        """
        if problem.objective == "general":
            return self.solve_screening_general(problem, cap=cap)
        cap = cap or self.settings.solution_cap
        tables = _build_tables(problem)
        if method == "auto":
            n_menus = 2 ** len(tables.items)
            method = "menus" if n_menus <= MENU_METHOD_LIMIT else "search"
        if method == "menus":
            solution = self._solve_by_menus(problem, tables, cap)
        elif method == "search":
            solution = self._solve_by_search(problem, tables, cap)
        else:
            raise GameInputError(f"méthode inconnue: {method!r}")
        logger.debug(
            f"✓ Screening principal {problem.game.principals[problem.principal]}: "
            f"valeur {format_rational(solution.value)}, {len(solution.mechanisms)} mécanisme(s) ({solution.method})"
        )
        return solution

    def _solve_by_menus(self, problem: ScreeningProblem, tables: _Tables, cap: int) -> ScreeningSolution:
        menus = self._menu_space(problem)
        results = parallel_map(partial(_menu_worker, tables), menus, self.settings.jobs)
        best = None
        optimal: List[Tuple[int, ...]] = []
        for menu, result in results:
            if result is None:
                continue
            value, assignment = result
            if best is None or value > best:
                best, optimal = value, [assignment]
            elif value == best:
                optimal.append(assignment)
        if best is None:
            raise InfeasibleError("aucun mécanisme réalisable")
        truncated = len(optimal) > cap
        mechanisms = [self._mechanism(problem, tables, a) for a in optimal[:cap]]
        return ScreeningSolution(problem.principal, Fraction(best, tables.scale), mechanisms, truncated, "menus", len(menus))

    def _solve_by_search(self, problem: ScreeningProblem, tables: _Tables, cap: int) -> ScreeningSolution:
        n_types = len(tables.v)
        q = tables.quit_index
        domains: List[List[int]] = []
        for t in range(n_types):
            dom = []
            for k in range(len(tables.items)):
                if tables.threshold[t] is not None and tables.v[t][k] < tables.threshold[t]:
                    continue
                if tables.intrinsic and tables.v[t][k] < 0:
                    continue
                dom.append(k)
            if tables.intrinsic:
                dom.append(q)
            dom.sort(key=lambda k: (-tables.u[t][k], k))
            domains.append(dom)

        state = {"best": None, "found": [], "truncated": False, "nodes": 0}

        def bound(doms: List[List[int]], start: int) -> int:
            return sum(tables.p[s] * max(tables.u[s][k] for k in doms[s]) for s in range(start, n_types))

        def dfs(t: int, assignment: List[int], value: int, doms: List[List[int]]) -> None:
            state["nodes"] += 1
            if t == n_types:
                if state["best"] is None or value > state["best"]:
                    state["best"], state["found"], state["truncated"] = value, [tuple(assignment)], False
                elif value == state["best"]:
                    if len(state["found"]) < cap:
                        state["found"].append(tuple(assignment))
                    else:
                        state["truncated"] = True
                return
            for k in doms[t]:
                new_doms = doms[: t + 1] + [
                    [j for j in doms[s] if _compatible(tables, t, k, s, j)] for s in range(t + 1, n_types)
                ]
                if any(not d for d in new_doms[t + 1:]):
                    continue
                gain = value + tables.p[t] * tables.u[t][k]
                limit = gain + bound(new_doms, t + 1)
                best = state["best"]
                if best is not None and (limit < best or (limit == best and state["truncated"])):
                    continue
                assignment.append(k)
                dfs(t + 1, assignment, gain, new_doms)
                assignment.pop()

        dfs(0, [], 0, domains)
        if state["best"] is None:
            raise InfeasibleError("aucun mécanisme réalisable")

        def order(a: Tuple[int, ...]):
            rng = sorted({k for k in a if k != q})
            return (len(rng), rng, a)

        found = sorted(state["found"], key=order)
        mechanisms = [self._mechanism(problem, tables, a) for a in found]
        return ScreeningSolution(problem.principal, Fraction(state["best"], tables.scale), mechanisms,
                                 state["truncated"], "search", state["nodes"])

    def solve_screening_general(self, problem: ScreeningProblem, cap: Optional[int] = None) -> ScreeningSolution:
        """
        Programme à paiements généraux: l'objectif passe par la stratégie σ_A.

        Args:
            problem: programme avec objective="general" et une stratégie pure
            cap: nombre maximal de mécanismes listés

        Returns:
            ScreeningSolution
        """
        from app.verifier_agent import VerifierAgent

        game, i = problem.game, problem.principal
        strategy = problem.strategy
        if strategy is None:
            raise GameInputError("stratégie de l'agent requise")
        cap = cap or self.settings.solution_cap
        table = IndirectUtilityAgent().indirect_utility(game, i, problem.rival_menus, augment=game.delegated)

        candidates = [problem.rival_menus.replace(i, menu) for menu in game.all_menus(i, len(game.types))]
        iia = VerifierAgent(self.settings).check_iia(strategy, game, "IIA-1", profiles=candidates)
        if not iia.passed:
            raise PreconditionError(f"la stratégie viole IIA-1: {iia.violation}")

        best, optimal = None, []
        for profile in candidates:
            menu = profile.menus[i]
            assignment, value, feasible = [], Fraction(0), True
            for t, prob in enumerate(game.probs):
                choice = strategy.choose(profile, t)
                own = QUIT if choice == QUIT else choice[i]
                assignment.append(own)
                value += prob * game.u(i, choice, t)
                if own != QUIT:
                    top = max(table.value(o, t) for o in menu)
                    if table.value(own, t) != top:
                        feasible = False
            mech = DirectMechanism(i, tuple(assignment))
            if not feasible or mech.menu() != menu:
                continue
            if best is None or value > best:
                best, optimal = value, [mech]
            elif value == best:
                optimal.append(mech)
        if best is None:
            raise InfeasibleError("aucun menu dont la sélection de σ_A est surjective")
        return ScreeningSolution(i, best, optimal[:cap], len(optimal) > cap, "general", len(candidates))

    def brute_force_screening(self, problem: ScreeningProblem, limit: int = 10_000) -> Fraction:
        """
        Oracle exhaustif: maximum sur tous les mécanismes directs réalisables.

        Args:
            problem: programme de screening (objectif indépendant)
            limit: nombre maximal de mécanismes énumérés

        Returns:
            valeur optimale exacte
        """
        game, i = problem.game, problem.principal
        table = IndirectUtilityAgent().indirect_utility(game, i, problem.rival_menus, augment=game.delegated)
        codomain = list(game.outcomes[i]) + ([QUIT] if game.intrinsic else [])
        n_types = len(game.types)
        if len(codomain) ** n_types > limit:
            raise BoundExceededError(f"{len(codomain)}^{n_types} mécanismes > {limit}")

        def v(o: str, t: int) -> Fraction:
            return Fraction(0) if o == QUIT else table.value(o, t)

        best = None
        for phi in itertools.product(codomain, repeat=n_types):
            ok = True
            for t in range(n_types):
                if game.intrinsic and v(phi[t], t) < 0:
                    ok = False
                elif game.delegated and v(phi[t], t) < table.value(game.outside_options[i], t):
                    ok = False
                elif any(v(phi[t], t) < v(phi[s], t) for s in range(n_types)):
                    ok = False
                if not ok:
                    break
            if ok:
                value = sum((game.probs[t] * game.u_own(i, phi[t], t) for t in range(n_types)), Fraction(0))
                best = value if best is None else max(best, value)
        return best

    def is_feasible(self, problem: ScreeningProblem, mechanism: DirectMechanism) -> bool:
        """Re-vérification IC/IR indépendante d'un mécanisme."""
        game, i = problem.game, problem.principal
        table = IndirectUtilityAgent().indirect_utility(game, i, problem.rival_menus, augment=game.delegated)

        def v(o: str, t: int) -> Fraction:
            return Fraction(0) if o == QUIT else table.value(o, t)

        phi = mechanism.assignment
        for t in range(len(game.types)):
            if game.intrinsic and v(phi[t], t) < 0:
                return False
            if game.delegated and v(phi[t], t) < table.value(game.outside_options[i], t):
                return False
            if any(v(phi[t], t) < v(phi[s], t) for s in range(len(phi))):
                return False
        return True

    def mechanism_value(self, game: FiniteGame, mechanism: DirectMechanism) -> Fraction:
        i = mechanism.principal
        return sum((p * game.u_own(i, o, t) for t, (p, o) in enumerate(zip(game.probs, mechanism.assignment))), Fraction(0))


if __name__ == "__main__":
    from pathlib import Path

    from app.game_model import GameModelAgent

    fixture = Path(__file__).resolve().parent.parent / "fixtures" / "e1.json"
    game = GameModelAgent().load_game(fixture, params={"p": "1/2"})
    problem = ScreeningProblem(game, 0, MenuProfile.of([{"a"}, {"b", "b'"}]))
    solution = ScreeningAgent().solve_screening(problem)
    print(f"✓ Valeur optimale: {format_rational(solution.value)}")
    print(solution.to_frame(game).to_string(index=False))
