"""
Utilité indirecte de l'agent v_i(o_i, t | 𝓜₋ᵢ): enveloppe supérieure de V
sur les sélections possibles dans les menus des rivaux.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import pandas as pd

from app.errors import GameInputError
from app.game_model import QUIT, FiniteGame, MenuProfile, format_rational

RivalMenus = Union[MenuProfile, Sequence[Optional[frozenset]], Mapping[int, frozenset]]


@dataclass(frozen=True)
class IndirectUtilityTable:
    """
    Table (o_i ∪ quit, t) -> (valeur, ensemble des profils rivaux maximisants).

    Une table issue d'un mélange n'a pas de témoins: `rival_menus` est vide et
    `mixture` porte la liste pondérée des menus rivaux.
    """

    principal: int
    rival_menus: Tuple[Optional[Tuple[str, ...]], ...]
    entries: Dict[Tuple[str, int], Tuple[Fraction, Tuple[Tuple[str, ...], ...]]]
    mixture: Tuple[Tuple[Fraction, Tuple[Optional[Tuple[str, ...]], ...]], ...] = ()

    def value(self, outcome: str, t: int) -> Fraction:
        return self.entries[(outcome, t)][0]

    def witnesses(self, outcome: str, t: int) -> Tuple[Tuple[str, ...], ...]:
        return self.entries[(outcome, t)][1]

    def to_frame(self, game: FiniteGame) -> pd.DataFrame:
        rows = []
        for (o, t), (value, witnesses) in self.entries.items():
            rows.append({
                "outcome": o,
                "type": game.types[t],
                "value": format_rational(value),
                "witnesses": [list(w) for w in witnesses],
            })
        return pd.DataFrame(rows)

    def to_dict(self, game: FiniteGame) -> dict:
        out = {
            "principal": game.principals[self.principal],
            "rival_menus": _menu_map(game, self.rival_menus),
            "entries": self.to_frame(game).to_dict(orient="records"),
        }
        if self.mixture:
            out["mixture"] = [{"weight": format_rational(w), "rival_menus": _menu_map(game, menus)}
                              for w, menus in self.mixture]
        return out


def _menu_map(game: FiniteGame, menus) -> dict:
    return {game.principals[j]: list(menu) for j, menu in enumerate(menus) if menu is not None}


class IndirectUtilityAgent:
    def __init__(self):
        """Agent de calcul des utilités indirectes (Def. enveloppe sur les menus rivaux)."""
        pass

    def _normalize(self, game: FiniteGame, i: int, rival_menus: RivalMenus, augment: bool) -> List[Optional[Tuple[str, ...]]]:
        if isinstance(rival_menus, MenuProfile):
            raw = list(rival_menus.menus)
        elif isinstance(rival_menus, Mapping):
            raw = [rival_menus.get(j) for j in range(game.n)]
        else:
            raw = list(rival_menus)
        if len(raw) != game.n:
            raise GameInputError(f"{len(raw)} menus fournis pour {game.n} principaux")
        menus: List[Optional[Tuple[str, ...]]] = []
        for j, menu in enumerate(raw):
            if j == i:
                menus.append(None)
                continue
            if not menu:
                raise GameInputError(f"menu rival vide pour le principal {game.principals[j]}")
            items = set(menu)
            if augment and game.delegated:
                items.add(game.outside_options[j])
            menus.append(game.sorted_menu(j, items))
        return menus

    def indirect_utility(self, game: FiniteGame, i: int, rival_menus: RivalMenus, augment: bool = False) -> IndirectUtilityTable:
        """
        Calcule v_i(o_i, t | 𝓜₋ᵢ) pour tout o_i et tout t, avec tous les maximiseurs.

        Args:
            game: le jeu
            i: indice du principal
            rival_menus: menus des rivaux (l'entrée i est ignorée)
            augment: ajoute l'option extérieure de chaque rival (mode délégué)

        Returns:
            IndirectUtilityTable
        """
        menus = self._normalize(game, i, rival_menus, augment)
        rivals = [menu for j, menu in enumerate(menus) if j != i]
        entries: Dict[Tuple[str, int], Tuple[Fraction, Tuple[Tuple[str, ...], ...]]] = {}
        for t in range(len(game.types)):
            for o in game.outcomes[i]:
                best, argmax = None, []
                for rest in itertools.product(*rivals):
                    profile = rest[:i] + (o,) + rest[i:]
                    value = game.V(profile, t)
                    if best is None or value > best:
                        best, argmax = value, [rest]
                    elif value == best:
                        argmax.append(rest)
                entries[(o, t)] = (best, tuple(argmax))
            if game.intrinsic:
                entries[(QUIT, t)] = (Fraction(0), ())
        return IndirectUtilityTable(i, tuple(menus), entries)

    def indirect_utility_mixed(self, game: FiniteGame, i: int,
                               rival_menu_distribution: Sequence[Tuple[Fraction, RivalMenus]],
                               augment: bool = False) -> IndirectUtilityTable:
        """
        Utilité indirecte face à un profil de menus rivaux aléatoire.

        Args:
            game: le jeu
            i: indice du principal
            rival_menu_distribution: liste (poids, menus rivaux), poids de somme 1
            augment: comme pour indirect_utility

        Returns:
            IndirectUtilityTable (moyenne pondérée des enveloppes)
        """
        weights = [Fraction(w) for w, _ in rival_menu_distribution]
        if any(w < 0 for w in weights) or sum(weights, Fraction(0)) != 1:
            raise GameInputError(f"les poids du mélange somment à {format_rational(sum(weights, Fraction(0)))}")
        tables = [self.indirect_utility(game, i, menus, augment) for _, menus in rival_menu_distribution]
        support = [(w, tab) for w, tab in zip(weights, tables) if w > 0]
        if len(support) == 1:
            return support[0][1]

        entries = {}
        for key in tables[0].entries:
            value = sum((w * tab.entries[key][0] for w, tab in support), Fraction(0))
            entries[key] = (value, ())
        merged = tuple(None for _ in range(game.n))
        return IndirectUtilityTable(i, merged, entries, tuple((w, tab.rival_menus) for w, tab in support))


if __name__ == "__main__":
    from pathlib import Path

    from app.game_model import GameModelAgent

    fixture = Path(__file__).resolve().parent.parent / "fixtures" / "e1.json"
    game = GameModelAgent().load_game(fixture, params={"p": "4/5"})
    table = IndirectUtilityAgent().indirect_utility(game, 0, MenuProfile.of([{"a"}, {"b", "b'"}]))
    print(table.to_frame(game).to_string(index=False))
