"""
Élimination de Fourier–Motzkin exacte sur les rationnels.

Chaque contrainte est a·x ≤ b. Toute contrainte dérivée garde ses
multiplicateurs (≥ 0) sur les contraintes d'origine, si bien qu'une
contradiction 0 ≤ b < 0 est un certificat de Farkas vérifiable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from app.errors import BoundExceededError
from app.log import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class Row:
    coeffs: Tuple[Fraction, ...]
    bound: Fraction
    multipliers: Tuple[Tuple[int, Fraction], ...]

    def support(self) -> List[int]:
        return [k for k, c in enumerate(self.coeffs) if c != 0]

    def scaled(self, factor: Fraction) -> "Row":
        return Row(
            tuple(c * factor for c in self.coeffs),
            self.bound * factor,
            tuple((j, m * factor) for j, m in self.multipliers),
        )


def _combine(pos: Row, neg: Row, var: int) -> Row:
    """Combinaison positive qui annule la variable `var`."""
    a, b = pos.scaled(1 / pos.coeffs[var]), neg.scaled(-1 / neg.coeffs[var])
    coeffs = tuple(x + y for x, y in zip(a.coeffs, b.coeffs))
    merged: Dict[int, Fraction] = {}
    for j, m in a.multipliers + b.multipliers:
        merged[j] = merged.get(j, Fraction(0)) + m
    return Row(coeffs, a.bound + b.bound, tuple(sorted(merged.items())))


def _normalize(row: Row) -> Row:
    nonzero = [abs(c) for c in row.coeffs if c != 0]
    if not nonzero:
        return row
    return row.scaled(1 / max(nonzero))


@dataclass
class EliminationResult:
    feasible: bool
    witness: Optional[List[Fraction]] = None
    contradiction: Optional[Row] = None
    trace: List[str] = field(default_factory=list)


class LinearSystem:
    """Système a·x ≤ b à variables nommées, coefficients rationnels."""

    def __init__(self, names: Sequence[str]):
        self.names = list(names)
        self.rows: List[Row] = []
        self.labels: List[str] = []

    @property
    def n_vars(self) -> int:
        return len(self.names)

    def _dense(self, coeffs: Dict[int, Fraction]) -> Tuple[Fraction, ...]:
        return tuple(Fraction(coeffs.get(k, 0)) for k in range(self.n_vars))

    def add_le(self, coeffs: Dict[int, Fraction], bound: Fraction, label: str) -> None:
        index = len(self.rows)
        self.rows.append(Row(self._dense(coeffs), Fraction(bound), ((index, Fraction(1)),)))
        self.labels.append(label)

    def add_ge(self, coeffs: Dict[int, Fraction], bound: Fraction, label: str) -> None:
        self.add_le({k: -Fraction(c) for k, c in coeffs.items()}, -Fraction(bound), label)

    def add_eq(self, coeffs: Dict[int, Fraction], bound: Fraction, label: str) -> None:
        self.add_le(coeffs, bound, f"{label} (≤)")
        self.add_ge(coeffs, bound, f"{label} (≥)")

    def satisfied_by(self, x: Sequence[Fraction]) -> bool:
        return all(sum((c * v for c, v in zip(r.coeffs, x)), Fraction(0)) <= r.bound for r in self.rows)

    def check_certificate(self, row: Row) -> bool:
        """Re-dérive la contradiction: Σλ_j a_j = 0, Σλ_j b_j < 0, λ ≥ 0."""
        if any(m < 0 for _, m in row.multipliers):
            return False
        coeffs = [Fraction(0)] * self.n_vars
        bound = Fraction(0)
        for j, m in row.multipliers:
            original = self.rows[j]
            for k, c in enumerate(original.coeffs):
                coeffs[k] += m * c
            bound += m * original.bound
        return all(c == 0 for c in coeffs) and bound < 0

    def describe(self, row: Row) -> str:
        terms = [f"{c}·{self.names[k]}" for k, c in enumerate(row.coeffs) if c != 0]
        return f"{' + '.join(terms) or '0'} ≤ {row.bound}"


class FourierMotzkin:
    def __init__(self, variable_bound: int = 32):
        """Moteur d'élimination exacte (faisabilité + témoin + certificat)."""
        self.variable_bound = variable_bound

    def _pick_pivot(self, rows: List[Row], remaining: List[int]) -> int:
        best, best_cost = remaining[0], None
        for k in remaining:
            p = sum(1 for r in rows if r.coeffs[k] > 0)
            n = sum(1 for r in rows if r.coeffs[k] < 0)
            cost = p * n - p - n
            if best_cost is None or cost < best_cost:
                best, best_cost = k, cost
        return best

    def solve(self, system: LinearSystem) -> EliminationResult:
        """
        Décide la faisabilité du système par élimination successive.

        Args:
            system: contraintes a·x ≤ b

        Returns:
            EliminationResult (témoin par substitution arrière, ou contradiction certifiée)
        """
        if system.n_vars > self.variable_bound:
            raise BoundExceededError(f"{system.n_vars} variables > {self.variable_bound}")
        rows = list(system.rows)
        remaining = list(range(system.n_vars))
        stages: List[Tuple[int, List[Row]]] = []
        trace: List[str] = []

        bad = next((r for r in rows if not r.support() and r.bound < 0), None)
        if bad is not None:
            trace.append(f"contradiction: 0 ≤ {bad.bound}")
            return EliminationResult(False, contradiction=bad, trace=trace)
        while remaining:
            var = self._pick_pivot(rows, remaining)
            remaining.remove(var)
            pos = [r for r in rows if r.coeffs[var] > 0]
            neg = [r for r in rows if r.coeffs[var] < 0]
            zero = [r for r in rows if r.coeffs[var] == 0]
            stages.append((var, pos + neg))
            derived = [_combine(p, q, var) for p in pos for q in neg]
            rows = self._prune(zero + derived)
            trace.append(f"élimine {system.names[var]}: z={len(zero)}, p={len(pos)}, n={len(neg)} -> {len(rows)} lignes")
            bad = next((r for r in rows if not r.support() and r.bound < 0), None)
            if bad is not None:
                trace.append(f"contradiction: 0 ≤ {bad.bound}")
                logger.debug(f"✗ Système infaisable ({len(trace)} étapes)")
                return EliminationResult(False, contradiction=bad, trace=trace)

        witness = [Fraction(0)] * system.n_vars
        for var, involved in reversed(stages):
            lower, upper = None, None
            for r in involved:
                rest = sum((c * witness[k] for k, c in enumerate(r.coeffs) if k != var), Fraction(0))
                limit = (r.bound - rest) / r.coeffs[var]
                if r.coeffs[var] > 0:
                    upper = limit if upper is None else min(upper, limit)
                else:
                    lower = limit if lower is None else max(lower, limit)
            if lower is not None and upper is not None:
                witness[var] = (lower + upper) / 2
            elif lower is not None:
                witness[var] = lower
            elif upper is not None:
                witness[var] = upper
            trace.append(f"{system.names[var]} ∈ [{lower}, {upper}] -> {witness[var]}")
        logger.debug("✓ Système faisable")
        return EliminationResult(True, witness=witness, trace=trace)

    def _prune(self, rows: List[Row]) -> List[Row]:
        seen: Dict[Tuple, Row] = {}
        out = []
        for row in rows:
            if not row.support() and row.bound >= 0:
                continue
            norm = _normalize(row)
            key = (norm.coeffs, norm.bound)
            if key in seen:
                continue
            seen[key] = norm
            out.append(row)
        return out

    def interval(self, system: LinearSystem, var: int) -> Tuple[Optional[Fraction], Optional[Fraction]]:
        """Projection exacte du polyèdre sur une variable (bornes inf/sup)."""
        rows = list(system.rows)
        for k in range(system.n_vars):
            if k == var:
                continue
            pos = [r for r in rows if r.coeffs[k] > 0]
            neg = [r for r in rows if r.coeffs[k] < 0]
            zero = [r for r in rows if r.coeffs[k] == 0]
            rows = self._prune(zero + [_combine(p, q, k) for p in pos for q in neg])
        lower, upper = None, None
        for r in rows:
            c = r.coeffs[var]
            if c > 0:
                upper = r.bound / c if upper is None else min(upper, r.bound / c)
            elif c < 0:
                lower = r.bound / c if lower is None else max(lower, r.bound / c)
        return lower, upper
