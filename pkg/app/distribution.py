"""
Distributions de types sur [t_low, t_high]: densité f, fonction de
répartition F et rapport (1-F)/f, analytiques (uniforme, linéaire) ou
échantillonnés.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.integrate import cumulative_trapezoid

from app.errors import GameInputError
from app.log import get_logger

logger = get_logger(__name__)


class DensityDoc(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    preset: Literal["uniform", "linear", "sampled"] = "uniform"
    slope: float = 0.0
    t: Optional[List[float]] = None
    f: Optional[List[float]] = None
    F: Optional[List[float]] = None


@dataclass(frozen=True)
class Distribution:
    doc: DensityDoc
    t_low: float
    t_high: float

    @property
    def analytic(self) -> bool:
        return self.doc.preset != "sampled"

    @property
    def length(self) -> float:
        return self.t_high - self.t_low

    def f(self, t) -> np.ndarray:
        d, t = self.doc, np.asarray(t, dtype=float)
        if d.preset == "uniform":
            return np.full_like(t, 1.0 / self.length)
        if d.preset == "linear":
            x = (t - self.t_low) / self.length
            return (1 + d.slope * x) / (self.length * (1 + d.slope / 2))
        return np.interp(t, d.t, d.f)

    def F(self, t) -> np.ndarray:
        d, t = self.doc, np.asarray(t, dtype=float)
        if d.preset == "uniform":
            return np.clip((t - self.t_low) / self.length, 0.0, 1.0)
        if d.preset == "linear":
            x = np.clip((t - self.t_low) / self.length, 0.0, 1.0)
            return (x + d.slope * x ** 2 / 2) / (1 + d.slope / 2)
        if d.F is not None:
            return np.interp(t, d.t, d.F)
        cdf = cumulative_trapezoid(d.f, d.t, initial=0.0)
        return np.interp(t, d.t, cdf / cdf[-1])

    def hazard(self, t) -> np.ndarray:
        """
        Rapport (1-F)/f.

        Limite analytique en t_high pour les presets; pour une densité
        échantillonnée qui s'annule en t_high, prolongement unilatéral.
        """
        t = np.asarray(t, dtype=float)
        d = self.doc
        if d.preset == "uniform":
            return np.clip(self.t_high - t, 0.0, None)
        if d.preset == "linear":
            x = np.clip((t - self.t_low) / self.length, 0.0, 1.0)
            tail = (1 - x) + d.slope * (1 - x ** 2) / 2
            return self.length * tail / (1 + d.slope * x)
        f = self.f(t)
        out = np.empty_like(t)
        safe = f > 1e-12
        out[safe] = (1 - self.F(t[safe])) / f[safe]
        if not safe.all():
            logger.warning("⚠ Densité nulle: rapport (1-F)/f prolongé unilatéralement")
            h = 1e-6 * self.length
            left = self.t_high - np.array([2 * h, h])
            ratios = (1 - self.F(left)) / self.f(left)
            slope = (ratios[1] - ratios[0]) / h
            out[~safe] = ratios[1] + slope * (t[~safe] - left[1])
        return out

    def validate(self, points: int, tol: float, vanishing_top: bool = False) -> None:
        d = self.doc
        if not self.t_low < self.t_high:
            raise GameInputError("intervalle de types vide")
        if d.preset == "linear" and d.slope <= -1:
            raise GameInputError("densité linéaire: pente > -1 requise")
        if d.preset == "sampled":
            if d.t is None or d.f is None or len(d.t) != len(d.f) or len(d.t) < 2:
                raise GameInputError("densité échantillonnée: tableaux t et f de même longueur requis")
            if np.any(np.diff(d.t) <= 0) or d.t[0] > self.t_low or d.t[-1] < self.t_high:
                raise GameInputError("densité échantillonnée: t croissant couvrant [t_low, t_high] requis")
            if d.F is not None and len(d.F) != len(d.t):
                raise GameInputError("densité échantillonnée: F de mauvaise longueur")
        grid = np.linspace(self.t_low, self.t_high, points)
        inner = grid[:-1] if vanishing_top else grid
        if np.any(self.f(inner) <= 0):
            raise GameInputError("densité non strictement positive sur la grille")
        if abs(float(self.F(self.t_low))) > tol or abs(float(self.F(self.t_high)) - 1) > tol:
            raise GameInputError("F(t_low)=0 et F(t_high)=1 requis")
