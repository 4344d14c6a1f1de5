"""
Exceptions du toolkit.

Les verdicts négatifs (UPR en échec, profil non-PBE, système infaisable)
sont des valeurs de rapport; les exceptions ci-dessous signalent des entrées
invalides ou des hypothèses non satisfaites.
"""


class CommonAgencyError(Exception):
    """Racine de toutes les erreurs du toolkit."""


class GameInputError(CommonAgencyError, ValueError):
    """Document de jeu/modèle invalide (schéma, probabilités, tables)."""


class StrategyUndefinedError(CommonAgencyError, KeyError):
    """La stratégie de l'agent n'est pas définie à un noeud nécessaire."""

    def __str__(self):
        return str(self.args[0]) if self.args else "stratégie non définie"


class PreconditionError(CommonAgencyError):
    """Hypothèse d'une opération non satisfaite."""


class BoundExceededError(CommonAgencyError):
    """Borne de taille (recherche de profils, variables d'élimination) dépassée."""


class NumericalError(CommonAgencyError):
    """Problème numérique: grille trop grossière, pas de changement de signe..."""


class InfeasibleError(CommonAgencyError):
    """Aucun mécanisme réalisable (options extérieures)."""
