"""Reader/writer for the UAI Markov-network text format.

Tables are read verbatim as costs by default; with values="probability"
entries are mapped through -log (zeros capped).  Scopes may appear in any
node order in the file; tables are permuted onto the sorted scope used
internally, and duplicate scopes merge by addition.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import UaiParseError
from .model import Factor, GraphicalModel

# Cost assigned to probability entries <= 0 under values="probability".
LOG_ZERO_COST = 1e20


def _tokenize(text: str) -> list[tuple[str, int]]:
    out = []
    for ln, line in enumerate(text.splitlines(), start=1):
        for tok in line.split():
            out.append((tok, ln))
    return out


class _TokenStream:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    @property
    def exhausted(self) -> bool:
        return self.pos >= len(self.tokens)

    @property
    def last_line(self) -> int:
        return self.tokens[-1][1] if self.tokens else 1

    def next(self, what: str) -> tuple[str, int]:
        if self.exhausted:
            raise UaiParseError(f"unexpected end of input, expected {what}", self.last_line)
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def next_int(self, what: str) -> int:
        tok, ln = self.next(what)
        try:
            return int(tok)
        except ValueError:
            raise UaiParseError(f"expected {what} (an integer), got {tok!r}", ln) from None

    def next_float(self, what: str) -> float:
        tok, ln = self.next(what)
        try:
            return float(tok)
        except ValueError:
            raise UaiParseError(f"expected {what} (a number), got {tok!r}", ln) from None


def parse_uai(text: str, values: str = "cost") -> GraphicalModel:
    """Parse UAI text into a model.  values: "cost" (verbatim) or
    "probability" (-log with zeros capped at LOG_ZERO_COST)."""
    if values not in ("cost", "probability"):
        raise UaiParseError(f"unknown values mode {values!r}")
    ts = _TokenStream(text)
    header, ln = ts.next("the MARKOV preamble")
    if header.upper() != "MARKOV":
        raise UaiParseError(f"expected MARKOV preamble, got {header!r}", ln)
    n = ts.next_int("the variable count")
    if n < 0:
        raise UaiParseError("negative variable count")
    cards = []
    for v in range(n):
        k = ts.next_int(f"cardinality of variable {v}")
        if k < 1:
            raise UaiParseError(f"variable {v} has cardinality {k}")
        cards.append(k)
    num_factors = ts.next_int("the factor count")

    scopes: list[list[int]] = []
    for i in range(num_factors):
        arity = ts.next_int(f"arity of factor {i}")
        if arity < 1:
            raise UaiParseError(f"factor {i} has arity {arity}")
        scope = []
        for j in range(arity):
            tok, ln = ts.next(f"scope entry {j} of factor {i}")
            try:
                v = int(tok)
            except ValueError:
                raise UaiParseError(f"bad scope entry {tok!r} in factor {i}", ln) from None
            if not 0 <= v < n:
                raise UaiParseError(f"factor {i} scope index {v} out of range", ln)
            scope.append(v)
        if len(set(scope)) != len(scope):
            raise UaiParseError(f"factor {i} repeats a variable in its scope")
        scopes.append(scope)

    factors: list[Factor] = []
    for i, scope in enumerate(scopes):
        count = ts.next_int(f"table size of factor {i}")
        expected = math.prod(cards[v] for v in scope)
        if count != expected:
            raise UaiParseError(
                f"factor {i} declares {count} table entries, scope needs {expected}"
            )
        try:
            vals = [ts.next_float(f"table entry of factor {i}") for _ in range(count)]
        except UaiParseError as e:
            raise UaiParseError(f"truncated table for factor {i}: {e}") from None
        arr = np.array(vals).reshape([cards[v] for v in scope])
        if values == "probability":
            with np.errstate(divide="ignore", invalid="ignore"):
                arr = np.where(arr > 0.0, -np.log(np.maximum(arr, 1e-300)), LOG_ZERO_COST)
        order = sorted(range(len(scope)), key=lambda p: scope[p])
        arr = np.transpose(arr, order)
        factors.append(Factor(tuple(sorted(scope)), arr))

    if not ts.exhausted:
        tok, ln = ts.next("end of input")
        raise UaiParseError(f"trailing content {tok!r}", ln)
    return GraphicalModel(cards, factors)


def write_uai(model: GraphicalModel) -> str:
    """Serialize with 17 significant digits (float64 round-trips exactly)."""
    lines = ["MARKOV", str(model.num_nodes)]
    lines.append(" ".join(str(k) for k in model.label_counts))
    lines.append(str(len(model.factors)))
    for f in model.factors:
        lines.append(f"{f.arity} " + " ".join(str(v) for v in f.scope))
    for f in model.factors:
        lines.append("")
        lines.append(str(f.table.size))
        flat = f.table.ravel()
        for start in range(0, flat.size, 8):
            lines.append(" " + " ".join(f"{x:.17g}" for x in flat[start : start + 8]))
    return "\n".join(lines) + "\n"
