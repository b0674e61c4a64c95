"""Exact known periods, keyed by canonical graph code.

Periods are stored symbolically as rational combinations of products of zeta
values.  A monomial is a sorted tuple of labels: an int n >= 2 stands for
zeta(n) and the pair (3, 5) for the double zeta value zeta(3, 5).  The empty
tuple is the rational unit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Union

from .graph_core import canonical_form, complete, parse_graph, wheel
from .special_fn import ZETA_3_5, binomial, zeta_value

Label = Union[int, tuple]
Monomial = tuple


def _label_key(label):
    # ints before tuples, then by value
    return (0, label) if isinstance(label, int) else (1, label)


def _label_weight(label) -> int:
    return label if isinstance(label, int) else sum(label)


def _label_value(label) -> float:
    if isinstance(label, int):
        return zeta_value(label)
    if tuple(label) == (3, 5):
        return ZETA_3_5
    raise ValueError(f"no stored value for zeta{label}")


def _label_str(label) -> str:
    if isinstance(label, int):
        return f"zeta({label})"
    return "zeta(" + ",".join(map(str, label)) + ")"


class SymbolicPeriod:
    """Rational linear combination of zeta monomials, immutable."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Monomial, object] | None = None):
        clean: dict[Monomial, Fraction] = {}
        for mono, coeff in (terms or {}).items():
            key = tuple(sorted((tuple(x) if not isinstance(x, int) else x for x in mono), key=_label_key))
            for lab in key:
                if isinstance(lab, int) and lab < 2:
                    raise ValueError("zeta labels must be >= 2")
            c = Fraction(coeff)
            if c:
                clean[key] = clean.get(key, Fraction(0)) + c
        self._terms = {k: v for k, v in clean.items() if v}

    @classmethod
    def rational(cls, q) -> "SymbolicPeriod":
        return cls({(): q})

    @classmethod
    def zeta(cls, *labels, coeff=1) -> "SymbolicPeriod":
        return cls({tuple(labels): coeff})

    @property
    def terms(self) -> dict[Monomial, Fraction]:
        return dict(self._terms)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = SymbolicPeriod.rational(other)
        return isinstance(other, SymbolicPeriod) and self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __add__(self, other: "SymbolicPeriod") -> "SymbolicPeriod":
        out = dict(self._terms)
        for k, v in other._terms.items():
            out[k] = out.get(k, Fraction(0)) + v
        return SymbolicPeriod(out)

    def __mul__(self, other) -> "SymbolicPeriod":
        if isinstance(other, (int, Fraction)):
            return SymbolicPeriod({k: v * other for k, v in self._terms.items()})
        out: dict[Monomial, Fraction] = {}
        for a, ca in self._terms.items():
            for b, cb in other._terms.items():
                key = tuple(sorted(a + b, key=_label_key))
                out[key] = out.get(key, Fraction(0)) + ca * cb
        return SymbolicPeriod(out)

    __rmul__ = __mul__

    @property
    def weight(self) -> int:
        """Largest total weight among the monomials (0 for rationals)."""
        return max((sum(_label_weight(x) for x in m) for m in self._terms), default=0)

    def numeric(self) -> float:
        total = 0.0
        for mono, c in self._terms.items():
            v = float(c)
            for lab in mono:
                v *= _label_value(lab)
            total += v
        return total

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for mono, c in sorted(self._terms.items(), key=lambda kv: [_label_key(x) for x in kv[0]]):
            factors = []
            i = 0
            while i < len(mono):
                j = i
                while j < len(mono) and mono[j] == mono[i]:
                    j += 1
                f = _label_str(mono[i])
                factors.append(f if j - i == 1 else f"{f}^{j - i}")
                i = j
            if not factors:
                parts.append(str(c))
            elif c == 1:
                parts.append("*".join(factors))
            else:
                parts.append(f"{c}*" + "*".join(factors))
        return " + ".join(parts)

    def __repr__(self):
        return f"SymbolicPeriod({self})"

    def to_json(self) -> list:
        return [
            [[list(x) if isinstance(x, tuple) else x for x in mono], str(c)]
            for mono, c in sorted(self._terms.items(), key=lambda kv: [_label_key(x) for x in kv[0]])
        ]


ONE = SymbolicPeriod.rational(1)


def wheel_period(spokes: int) -> SymbolicPeriod:
    """binomial(2l-2, l-1) zeta(2l-3)."""
    if spokes < 3:
        raise ValueError("wheels need at least 3 spokes")
    return SymbolicPeriod.zeta(2 * spokes - 3, coeff=binomial(2 * spokes - 2, spokes - 1))


class NotCertifiedError(ValueError):
    pass


def zigzag_period(loops: int) -> SymbolicPeriod:
    if loops not in (3, 4):
        raise NotCertifiedError(
            f"zig-zag period at {loops} loops is not certified by source (only 3 and 4 are)"
        )
    return wheel_period(loops)


@dataclass(frozen=True)
class Entry:
    code: bytes
    family: str
    loops: int
    period: SymbolicPeriod
    provenance: str = "closed form"

    def to_json(self) -> dict:
        return {
            "code": self.code.decode(),
            "family": self.family,
            "loops": self.loops,
            "period_symbolic": str(self.period),
            "period_numeric": self.period.numeric(),
        }


FISH = "v 2\ne 1 2\ne 1 2\n"


@lru_cache(maxsize=1)
def table() -> tuple[Entry, ...]:
    fish = parse_graph(FISH)
    w5 = wheel(5)
    return (
        Entry(canonical_form(complete(fish)), "fish", 1, SymbolicPeriod.rational(2), "derived: 1/x^4 residue"),
        Entry(canonical_form(complete(wheel(3))), "wheel-3", 3, wheel_period(3)),
        Entry(canonical_form(complete(wheel(4))), "wheel-4", 4, wheel_period(4)),
        # the 5-spoke wheel has a degree-5 hub, so there is no 4-regular
        # completion; it is keyed by the graph itself
        Entry(canonical_form(w5), "wheel-5", w5.loops, wheel_period(5)),
    )


# weight-8 double zeta value first met at six loops; no graph is attached
METADATA = {
    "zeta(3,5)": {"value": ZETA_3_5, "weight": 8, "loops": 6, "graph": None},
    "note": "multiple Deligne values occur from seven loops; not tabulated",
}


def lookup(code: bytes) -> SymbolicPeriod | None:
    for e in table():
        if e.code == code:
            return e.period
    return None


def entry_for(code: bytes) -> Entry | None:
    return next((e for e in table() if e.code == code), None)


def weight_bound_ok(entry: Entry) -> bool:
    """Periods at l loops have weight at most 2l - 3."""
    return entry.period.weight <= max(2 * entry.loops - 3, 0)


def dump_table() -> str:
    rows = [e.to_json() for e in table()]
    return json.dumps(rows, indent=2)


__all__ = [
    "SymbolicPeriod",
    "ONE",
    "wheel_period",
    "zigzag_period",
    "NotCertifiedError",
    "Entry",
    "table",
    "lookup",
    "entry_for",
    "weight_bound_ok",
    "dump_table",
    "METADATA",
]
