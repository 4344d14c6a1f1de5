"""
Modèle de jeu fini d'agence commune, en arithmétique rationnelle exacte.

Contient:
- le schéma JSON des documents de jeu (pydantic)
- FiniteGame, DirectMechanism, MenuProfile, AgentStrategy
- GameModelAgent: chargement, export, paiements espérés, jeux aléatoires
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, Iterable, Iterator, List, Literal, Mapping, Optional, Sequence, Tuple, Union

import sympy
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from app.errors import GameInputError, StrategyUndefinedError
from app.log import get_logger

logger = get_logger(__name__)

QUIT = "quit"

Profile = Tuple[str, ...]
Choice = Union[Profile, str]  # un profil de résultats, ou QUIT
RationalLike = Union[str, int, Fraction]


# ============================================
# Rationnels
# ============================================

def parse_rational(value: RationalLike, params: Optional[Mapping[str, Fraction]] = None) -> Fraction:
    """
    Convertit "num/den", un entier ou une expression paramétrée en Fraction.

    Args:
        value: valeur brute du document
        params: valeurs des paramètres nommés (ex: {"p": Fraction(4, 5)})

    Returns:
        Fraction exacte
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool) or isinstance(value, float):
        raise GameInputError(f"valeur non rationnelle: {value!r} (utiliser \"num/den\")")
    if isinstance(value, int):
        return Fraction(value)
    text = str(value).strip()
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        pass
    # expression paramétrée, évaluée exactement
    try:
        expr = sympy.sympify(text, rational=True)
    except (sympy.SympifyError, SyntaxError, TypeError) as e:
        raise GameInputError(f"expression illisible {text!r}: {e}")
    if params:
        expr = expr.subs({sympy.Symbol(k): sympy.Rational(v.numerator, v.denominator) for k, v in params.items()})
    if expr.free_symbols:
        missing = ", ".join(sorted(str(s) for s in expr.free_symbols))
        raise GameInputError(f"paramètre(s) manquant(s) pour {text!r}: {missing}")
    if not expr.is_Rational:
        raise GameInputError(f"{text!r} ne s'évalue pas en rationnel")
    return Fraction(int(expr.p), int(expr.q))


def format_rational(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


# ============================================
# Schéma des documents (JSON)
# ============================================

class _Doc(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class TypeRow(_Doc):
    label: str
    prob: Union[str, int]


class UtilityRow(_Doc):
    profile: List[str]
    type: str
    value: Union[str, int]


class PrincipalUtilityDoc(_Doc):
    mode: Literal["independent", "general"] = "independent"
    tables: Dict[str, List[UtilityRow]]


class OutsideDoc(_Doc):
    kind: Literal["intrinsic", "delegated"]
    options: Optional[Dict[str, str]] = None


class GameDocument(_Doc):
    principals: List[str] = Field(min_length=1)
    types: List[TypeRow] = Field(min_length=1)
    outcomes: Dict[str, List[str]]
    agent_utility: List[UtilityRow]
    principal_utility: PrincipalUtilityDoc
    outside: Optional[OutsideDoc] = None
    name: Optional[str] = None
    params: Optional[Dict[str, str]] = None  # valeurs par défaut, écrasées par load_game(params=...)


# ============================================
# Types du domaine
# ============================================

@dataclass(frozen=True)
class FiniteGame:
    """
    Jeu fini d'agence commune. Immuable après chargement.

    Les principaux sont désignés par leur indice (0..n-1) en interne et par
    leur label dans les documents.
    """

    principals: Tuple[str, ...]
    outcomes: Tuple[Tuple[str, ...], ...]
    types: Tuple[str, ...]
    probs: Tuple[Fraction, ...]
    agent_table: Dict[Tuple[Profile, str], Fraction] = field(repr=False)
    principal_mode: str
    principal_tables: Tuple[Dict[tuple, Fraction], ...] = field(repr=False)
    outside_kind: Optional[str] = None
    outside_options: Optional[Tuple[str, ...]] = None
    name: Optional[str] = None

    @property
    def n(self) -> int:
        return len(self.principals)

    @property
    def intrinsic(self) -> bool:
        return self.outside_kind == "intrinsic"

    @property
    def delegated(self) -> bool:
        return self.outside_kind == "delegated"

    @property
    def mode(self) -> str:
        return self.outside_kind or "plain"

    def index(self, principal: Union[int, str]) -> int:
        if isinstance(principal, int) and 0 <= principal < self.n:
            return principal
        try:
            return self.principals.index(str(principal))
        except ValueError:
            raise GameInputError(f"principal inconnu: {principal!r}")

    def type_index(self, label: str) -> int:
        try:
            return self.types.index(label)
        except ValueError:
            raise GameInputError(f"type inconnu: {label!r}")

    def order(self, i: int, outcome: str) -> int:
        try:
            return self.outcomes[i].index(outcome)
        except ValueError:
            raise GameInputError(f"résultat {outcome!r} inconnu pour le principal {self.principals[i]}")

    def sorted_menu(self, i: int, menu: Iterable[str]) -> Tuple[str, ...]:
        return tuple(sorted(set(menu), key=lambda o: self.order(i, o)))

    def V(self, profile: Choice, t: int) -> Fraction:
        """Utilité de l'agent; quit vaut la réservation 0."""
        if profile == QUIT:
            return Fraction(0)
        return self.agent_table[(tuple(profile), self.types[t])]

    def u(self, i: int, choice: Choice, t: int) -> Fraction:
        """Utilité du principal i pour un profil choisi (quit vaut 0)."""
        if choice == QUIT:
            return Fraction(0)
        if self.principal_mode == "independent":
            return self.principal_tables[i][(choice[i], self.types[t])]
        return self.principal_tables[i][(tuple(choice), self.types[t])]

    def u_own(self, i: int, outcome: str, t: int) -> Fraction:
        """Utilité du principal i pour son propre résultat (mode indépendant)."""
        if outcome == QUIT:
            return Fraction(0)
        if self.principal_mode != "independent":
            raise GameInputError("u_own n'a de sens qu'en mode indépendant")
        return self.principal_tables[i][(outcome, self.types[t])]

    def effective_menus(self, menus: Sequence[Iterable[str]]) -> List[Tuple[str, ...]]:
        """Menus vus par l'agent: augmentés des options extérieures en mode délégué."""
        out = []
        for i, menu in enumerate(menus):
            items = set(menu)
            if self.delegated:
                items.add(self.outside_options[i])
            out.append(self.sorted_menu(i, items))
        return out

    def profiles(self, menus: Sequence[Iterable[str]]) -> Iterator[Profile]:
        """Produit cartésien des menus, dans l'ordre déclaré des résultats."""
        ordered = [self.sorted_menu(i, m) for i, m in enumerate(menus)]
        return itertools.product(*ordered)

    def agent_optimal(self, menus: Sequence[Iterable[str]], t: int) -> Tuple[Optional[Fraction], List[Choice]]:
        """
        Choix optimaux de l'agent face à un profil de menus (conditions 1, 1I, 1D).

        Args:
            menus: un menu (itérable de résultats) par principal
            t: indice du type

        Returns:
            (valeur max, liste ordonnée des choix optimaux); [QUIT] si l'agent
            quitte (mode intrinsèque, max < 0, ou produit vide)
        """
        eff = self.effective_menus(menus)
        best: Optional[Fraction] = None
        choices: List[Choice] = []
        for profile in itertools.product(*eff):
            value = self.V(profile, t)
            if best is None or value > best:
                best, choices = value, [profile]
            elif value == best:
                choices.append(profile)
        if self.intrinsic and (best is None or best < 0):
            return best, [QUIT]
        if best is None:
            raise GameInputError("profil de menus vide")
        return best, choices

    def agent_choice_set(self, menus: Sequence[Iterable[str]], t: int) -> List[Choice]:
        """Tous les choix compatibles avec (1)/(1I)/(1D); quit inclus si le max vaut 0 en mode intrinsèque."""
        best, choices = self.agent_optimal(menus, t)
        if self.intrinsic and best == 0 and choices != [QUIT]:
            return choices + [QUIT]
        return choices

    def all_menus(self, i: int, max_size: Optional[int] = None) -> Iterator[Tuple[str, ...]]:
        """Sous-ensembles non vides de O_i, par cardinal puis ordre lexicographique."""
        items = self.outcomes[i]
        top = len(items) if max_size is None else min(max_size, len(items))
        for k in range(1, top + 1):
            yield from itertools.combinations(items, k)


@dataclass(frozen=True)
class DirectMechanism:
    """Mécanisme direct φ_i: T -> O_i ∪ {quit} (une entrée par type, dans l'ordre du jeu)."""

    principal: int
    assignment: Tuple[str, ...]

    def menu(self) -> frozenset:
        return frozenset(o for o in self.assignment if o != QUIT)

    def quit_types(self) -> frozenset:
        return frozenset(t for t, o in enumerate(self.assignment) if o == QUIT)

    def validate(self, game: FiniteGame) -> None:
        if len(self.assignment) != len(game.types):
            raise GameInputError(f"mécanisme du principal {game.principals[self.principal]}: {len(self.assignment)} entrées pour {len(game.types)} types")
        for o in self.assignment:
            if o == QUIT:
                if not game.intrinsic:
                    raise GameInputError("quit n'est permis qu'avec des options extérieures intrinsèques")
            else:
                game.order(self.principal, o)

    def to_dict(self, game: FiniteGame) -> dict:
        return {
            "principal": game.principals[self.principal],
            "map": {game.types[t]: o for t, o in enumerate(self.assignment)},
            "menu": list(game.sorted_menu(self.principal, self.menu())),
        }


@dataclass(frozen=True)
class MenuProfile:
    """Profil de menus (𝓜₁,…,𝓜ₙ), un ensemble de résultats par principal."""

    menus: Tuple[frozenset, ...]

    @classmethod
    def of(cls, menus: Sequence[Iterable[str]]) -> "MenuProfile":
        return cls(tuple(frozenset(m) for m in menus))

    @classmethod
    def from_mechanisms(cls, mechanisms: Sequence[DirectMechanism]) -> "MenuProfile":
        return cls(tuple(m.menu() for m in sorted(mechanisms, key=lambda m: m.principal)))

    def replace(self, i: int, menu: Iterable[str]) -> "MenuProfile":
        menus = list(self.menus)
        menus[i] = frozenset(menu)
        return MenuProfile(tuple(menus))

    def validate(self, game: FiniteGame) -> None:
        if len(self.menus) != game.n:
            raise GameInputError(f"{len(self.menus)} menus pour {game.n} principaux")
        for i, menu in enumerate(self.menus):
            if not menu:
                raise GameInputError(f"menu vide pour le principal {game.principals[i]}")
            for o in menu:
                game.order(i, o)

    def sort_key(self, game: FiniteGame) -> tuple:
        return tuple(tuple(game.order(i, o) for o in game.sorted_menu(i, m)) for i, m in enumerate(self.menus))

    def to_dict(self, game: FiniteGame) -> dict:
        return {game.principals[i]: list(game.sorted_menu(i, m)) for i, m in enumerate(self.menus)}


@dataclass(frozen=True)
class StrategyEntry:
    distribution: Tuple[Tuple[Choice, Fraction], ...]
    policy: str = "lexicographic"

    @property
    def pure(self) -> bool:
        return len(self.distribution) == 1

    def support(self) -> List[Choice]:
        return [c for c, w in self.distribution if w > 0]


POLICIES = ("on-path-UPR", "adversarial-to-deviator", "lexicographic", "given")


class LexicographicRule:
    """Choix agent-optimal, premier profil dans l'ordre déclaré."""

    policy = "lexicographic"

    def __init__(self, game: FiniteGame):
        self.game = game

    def __call__(self, profile: MenuProfile, t: int) -> StrategyEntry:
        _, choices = self.game.agent_optimal(profile.menus, t)
        return StrategyEntry(((choices[0], Fraction(1)),), self.policy)


class FavorableRule(LexicographicRule):
    """Choix agent-optimal, puis le meilleur pour le principal i, puis lexicographique."""

    def __init__(self, game: FiniteGame, principal: int):
        super().__init__(game)
        self.principal = principal

    def __call__(self, profile: MenuProfile, t: int) -> StrategyEntry:
        _, choices = self.game.agent_optimal(profile.menus, t)
        best = max(self.game.u(self.principal, c, t) for c in choices)
        pick = next(c for c in choices if self.game.u(self.principal, c, t) == best)
        return StrategyEntry(((pick, Fraction(1)),), self.policy)


class AgentStrategy:
    """
    Stratégie de l'agent σ_A: (profil de menus, type) -> distribution sur les profils.

    Définie paresseusement: entrées explicites, puis règle de repli optionnelle.
    """

    def __init__(self, entries: Optional[Dict[Tuple[MenuProfile, int], StrategyEntry]] = None,
                 fallback: Optional[Callable[[MenuProfile, int], StrategyEntry]] = None):
        self.entries: Dict[Tuple[MenuProfile, int], StrategyEntry] = dict(entries or {})
        self.fallback = fallback

    def set(self, profile: MenuProfile, t: int, distribution: Sequence[Tuple[Choice, Fraction]], policy: str = "given") -> None:
        total = sum((Fraction(w) for _, w in distribution), Fraction(0))
        if total != 1:
            raise GameInputError(f"poids de la distribution = {format_rational(total)} (≠ 1)")
        dist = tuple((c if c == QUIT else tuple(c), Fraction(w)) for c, w in distribution)
        self.entries[(profile, t)] = StrategyEntry(dist, policy)

    def defines(self, profile: MenuProfile, t: int) -> bool:
        return (profile, t) in self.entries or self.fallback is not None

    def at(self, profile: MenuProfile, t: int) -> StrategyEntry:
        entry = self.entries.get((profile, t))
        if entry is not None:
            return entry
        if self.fallback is None:
            raise StrategyUndefinedError(f"stratégie non définie au noeud ({profile}, type #{t})")
        return self.fallback(profile, t)

    def choose(self, profile: MenuProfile, t: int) -> Choice:
        """Choix pur (erreur si l'entrée est mixte)."""
        entry = self.at(profile, t)
        support = entry.support()
        if len(support) != 1:
            raise GameInputError("stratégie mixte là où un choix pur est requis")
        return support[0]

    @property
    def is_pure(self) -> bool:
        return all(len(e.support()) == 1 for e in self.entries.values())

    def to_dict(self, game: FiniteGame) -> dict:
        rows = []
        for (profile, t), entry in sorted(self.entries.items(), key=lambda kv: (kv[0][0].sort_key(game), kv[0][1])):
            rows.append({
                "profile": profile.to_dict(game),
                "type": game.types[t],
                "policy": entry.policy,
                "distribution": [
                    {"choice": c if c == QUIT else list(c), "weight": format_rational(w)}
                    for c, w in entry.distribution
                ],
            })
        return {"entries": rows, "fallback": getattr(self.fallback, "policy", None)}


# ============================================
# Agent
# ============================================

class GameModelAgent:
    def __init__(self):
        """Agent de chargement/validation des jeux finis et de calcul des paiements."""
        pass

    def load_game(self, document: Union[str, bytes, dict, Path], params: Optional[Mapping[str, RationalLike]] = None) -> FiniteGame:
        """
        Charge et valide un document de jeu.

        Args:
            document: texte JSON, dict déjà décodé, ou chemin de fichier
            params: paramètres des probabilités (ex: {"p": "4/5"})

        Returns:
            FiniteGame validé
        """
        if isinstance(document, Path):
            document = document.read_text(encoding="utf-8")
        if isinstance(document, (str, bytes)):
            try:
                document = json.loads(document)
            except json.JSONDecodeError as e:
                raise GameInputError(f"JSON invalide: {e}")
        try:
            doc = GameDocument.model_validate(document)
        except ValidationError as e:
            raise GameInputError(f"violation du schéma: {e}")

        merged = {**(doc.params or {}), **(params or {})}
        values = {k: parse_rational(v) for k, v in merged.items()}
        game = self._build(doc, values)
        logger.debug(f"✓ Jeu chargé: {game.n} principaux, {len(game.types)} types")
        return game

    def _build(self, doc: GameDocument, params: Dict[str, Fraction]) -> FiniteGame:
        principals = tuple(doc.principals)
        if len(set(principals)) != len(principals):
            raise GameInputError("principaux dupliqués")
        if set(doc.outcomes) != set(principals):
            raise GameInputError("outcomes doit avoir une entrée par principal")
        outcomes = []
        for p in principals:
            items = tuple(doc.outcomes[p])
            if not items:
                raise GameInputError(f"aucun résultat pour le principal {p}")
            if len(set(items)) != len(items):
                raise GameInputError(f"résultats dupliqués pour le principal {p}")
            if QUIT in items:
                raise GameInputError(f"'{QUIT}' est réservé")
            outcomes.append(items)
        outcomes = tuple(outcomes)

        types = tuple(row.label for row in doc.types)
        if len(set(types)) != len(types):
            raise GameInputError("types dupliqués")
        probs = tuple(parse_rational(row.prob, params) for row in doc.types)
        if any(p < 0 for p in probs):
            raise GameInputError("probabilité négative")
        total = sum(probs, Fraction(0))
        if total != 1:
            raise GameInputError(f"la distribution somme à {format_rational(total)} (distribution sums to {format_rational(total)})")

        def check_profile(profile: Sequence[str], where: str) -> Profile:
            if len(profile) != len(principals):
                raise GameInputError(f"{where}: profil {list(profile)} de mauvaise longueur")
            for i, o in enumerate(profile):
                if o not in outcomes[i]:
                    raise GameInputError(f"{where}: résultat inconnu {o!r} pour le principal {principals[i]}")
            return tuple(profile)

        def check_type(label: str, where: str) -> str:
            if label not in types:
                raise GameInputError(f"{where}: type inconnu {label!r}")
            return label

        agent_table: Dict[Tuple[Profile, str], Fraction] = {}
        for row in doc.agent_utility:
            key = (check_profile(row.profile, "agent_utility"), check_type(row.type, "agent_utility"))
            value = parse_rational(row.value, params)
            if key in agent_table and agent_table[key] != value:
                raise GameInputError(f"agent_utility: entrée contradictoire {key}")
            agent_table[key] = value
        for profile in itertools.product(*outcomes):
            for t in types:
                if (profile, t) not in agent_table:
                    raise GameInputError(f"agent_utility: entrée manquante pour {list(profile)} au type {t}")

        mode = doc.principal_utility.mode
        if set(doc.principal_utility.tables) != set(principals):
            raise GameInputError("principal_utility.tables doit avoir une table par principal")
        tables = []
        for i, p in enumerate(principals):
            table: Dict[tuple, Fraction] = {}
            where = f"principal_utility[{p}]"
            for row in doc.principal_utility.tables[p]:
                t = check_type(row.type, where)
                value = parse_rational(row.value, params)
                if mode == "independent":
                    if len(row.profile) == 1:
                        own = row.profile[0]
                        if own not in outcomes[i]:
                            raise GameInputError(f"{where}: résultat inconnu {own!r}")
                    else:
                        own = check_profile(row.profile, where)[i]
                    key = (own, t)
                    if key in table and table[key] != value:
                        raise GameInputError(
                            f"{where}: la table varie avec les résultats des rivaux en ({own}, {t}); "
                            f"incompatible avec le mode indépendant"
                        )
                else:
                    key = (check_profile(row.profile, where), t)
                    if key in table and table[key] != value:
                        raise GameInputError(f"{where}: entrée contradictoire {key}")
                table[key] = value
            expected = ((o, t) for o in outcomes[i] for t in types) if mode == "independent" else \
                ((prof, t) for prof in itertools.product(*outcomes) for t in types)
            for key in expected:
                if key not in table:
                    raise GameInputError(f"{where}: entrée manquante {key}")
            tables.append(table)

        outside_kind, outside_options = None, None
        if doc.outside is not None:
            outside_kind = doc.outside.kind
            if outside_kind == "delegated":
                options = doc.outside.options or {}
                if set(options) != set(principals):
                    raise GameInputError("options extérieures déléguées: une par principal requise")
                for i, p in enumerate(principals):
                    if options[p] not in outcomes[i]:
                        raise GameInputError(f"option extérieure {options[p]!r} hors de O_{p}")
                outside_options = tuple(options[p] for p in principals)

        return FiniteGame(
            principals=principals,
            outcomes=outcomes,
            types=types,
            probs=probs,
            agent_table=agent_table,
            principal_mode=mode,
            principal_tables=tuple(tables),
            outside_kind=outside_kind,
            outside_options=outside_options,
            name=doc.name,
        )

    def dump_game(self, game: FiniteGame) -> dict:
        """Exporte un FiniteGame vers le format document (inverse de load_game)."""
        doc = {
            "principals": list(game.principals),
            "types": [{"label": t, "prob": format_rational(p)} for t, p in zip(game.types, game.probs)],
            "outcomes": {p: list(game.outcomes[i]) for i, p in enumerate(game.principals)},
            "agent_utility": [
                {"profile": list(profile), "type": t, "value": format_rational(game.agent_table[(profile, t)])}
                for profile in itertools.product(*game.outcomes) for t in game.types
            ],
            "principal_utility": {"mode": game.principal_mode, "tables": {}},
        }
        for i, p in enumerate(game.principals):
            rows = []
            for key, value in game.principal_tables[i].items():
                own, t = key
                profile = [own] if game.principal_mode == "independent" else list(own)
                rows.append({"profile": profile, "type": t, "value": format_rational(value)})
            doc["principal_utility"]["tables"][p] = rows
        if game.outside_kind == "intrinsic":
            doc["outside"] = {"kind": "intrinsic"}
        elif game.outside_kind == "delegated":
            doc["outside"] = {"kind": "delegated", "options": dict(zip(game.principals, game.outside_options))}
        if game.name:
            doc["name"] = game.name
        return doc

    def expected_principal_payoff(self, game: FiniteGame, i: int, strategy: AgentStrategy, profile: MenuProfile) -> Fraction:
        """
        Paiement espéré 𝔼_t[u_i(σ_A(profil, t), t)], calculé exactement.

        Args:
            game: le jeu
            i: indice du principal
            strategy: stratégie de l'agent (définie à (profil, t) pour tout t)
            profile: profil de menus

        Returns:
            Fraction
        """
        total = Fraction(0)
        for t, prob in enumerate(game.probs):
            entry = strategy.at(profile, t)
            total += prob * sum((w * game.u(i, c, t) for c, w in entry.distribution), Fraction(0))
        return total

    # ============================================
    # Entrées annexes (mécanismes, profils, stratégies)
    # ============================================

    def parse_mechanisms(self, game: FiniteGame, document: Mapping) -> List[DirectMechanism]:
        """{"mechanisms": {principal: {type: résultat}}} -> liste ordonnée de mécanismes."""
        raw = document.get("mechanisms", document)
        if set(raw) != set(game.principals):
            raise GameInputError("un mécanisme par principal requis")
        mechanisms = []
        for i, p in enumerate(game.principals):
            spec = raw[p]
            if isinstance(spec, list):
                assignment = tuple(spec)
            else:
                missing = [t for t in game.types if t not in spec]
                if missing:
                    raise GameInputError(f"mécanisme du principal {p}: types manquants {missing}")
                assignment = tuple(spec[t] for t in game.types)
            mech = DirectMechanism(i, assignment)
            mech.validate(game)
            mechanisms.append(mech)
        return mechanisms

    def parse_profile(self, game: FiniteGame, document: Mapping) -> MenuProfile:
        raw = document.get("profile", document)
        if set(raw) != set(game.principals):
            raise GameInputError("un menu par principal requis")
        profile = MenuProfile.of([raw[p] for p in game.principals])
        profile.validate(game)
        return profile

    def parse_strategy(self, game: FiniteGame, document: Mapping) -> AgentStrategy:
        strategy = AgentStrategy()
        for row in document.get("entries", []):
            profile = self.parse_profile(game, {"profile": row["profile"]})
            t = game.type_index(row["type"])
            dist = []
            for item in row["distribution"]:
                choice = item["choice"]
                dist.append((QUIT if choice == QUIT else tuple(choice), parse_rational(item["weight"])))
            strategy.set(profile, t, dist, row.get("policy", "given"))
        if document.get("fallback") == "lexicographic":
            strategy.fallback = LexicographicRule(game)
        return strategy

    # ============================================
    # Jeux aléatoires (batteries)
    # ============================================

    def random_game(self, seed: int, n_principals: int = 2, n_types: int = 2,
                    n_outcomes: Union[int, Sequence[int]] = 2, separable: bool = False,
                    outside: Optional[str] = None, low: int = 0, high: int = 9) -> FiniteGame:
        """
        Génère un jeu aléatoire reproductible (tables entières, mode indépendant).

        Args:
            seed: graine
            n_principals, n_types, n_outcomes: tailles
            separable: V = Σ_i v^i(o_i,t) si True
            outside: None, "intrinsic" ou "delegated"
            low, high: bornes des valeurs entières

        Returns:
            FiniteGame
        """
        rng = random.Random(seed)
        sizes = [n_outcomes] * n_principals if isinstance(n_outcomes, int) else list(n_outcomes)
        principals = [str(k + 1) for k in range(n_principals)]
        outcomes = {p: [f"o{p}_{k}" for k in range(sizes[j])] for j, p in enumerate(principals)}
        types = [f"t{k + 1}" for k in range(n_types)]
        weights = [rng.randint(1, 4) for _ in types]
        total = sum(weights)

        doc = {
            "name": f"random-{seed}",
            "principals": principals,
            "types": [{"label": t, "prob": f"{w}/{total}"} for t, w in zip(types, weights)],
            "outcomes": outcomes,
            "agent_utility": [],
            "principal_utility": {"mode": "independent", "tables": {p: [] for p in principals}},
        }
        if separable:
            parts = {(p, o, t): rng.randint(low, high) for p in principals for o in outcomes[p] for t in types}
        for profile in itertools.product(*(outcomes[p] for p in principals)):
            for t in types:
                if separable:
                    value = sum(parts[(p, o, t)] for p, o in zip(principals, profile))
                else:
                    value = rng.randint(low, high)
                doc["agent_utility"].append({"profile": list(profile), "type": t, "value": str(value)})
        for p in principals:
            for o in outcomes[p]:
                for t in types:
                    doc["principal_utility"]["tables"][p].append({"profile": [o], "type": t, "value": str(rng.randint(low, high))})
        if outside == "intrinsic":
            doc["outside"] = {"kind": "intrinsic"}
        elif outside == "delegated":
            doc["outside"] = {"kind": "delegated", "options": {p: outcomes[p][0] for p in principals}}
        return self.load_game(doc)


if __name__ == "__main__":
    agent = GameModelAgent()
    fixture = Path(__file__).resolve().parent.parent / "fixtures" / "e1.json"
    game = agent.load_game(fixture, params={"p": "4/5"})
    print(f"✓ {game.name}: {game.n} principaux, types {game.types}, {len(game.agent_table)} entrées V")
