"""Brute-force ground truth for persistency and improving-mapping claims.

Everything here enumerates the joint label space, so it only runs on desk
scale instances, and everything a solver or the pruning loop claims can be
checked against it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidLabelingError, StateSpaceCapError
from .model import GraphicalModel, Labeling, PartialLabeling
from .solvers import ENUMERATION_CAP, TIE_TOL, _labelings_block, _CHUNK, energies_of, solve_bruteforce


@dataclass(frozen=True)
class OracleReport:
    claim: str  # persistent | strongly-persistent | improving | strictly-improving
    verdict: bool
    counterexample: tuple[int, ...] | None
    num_optima: int

    def __post_init__(self):
        assert (self.counterexample is not None) == (not self.verdict)


def _validated_subset(model: GraphicalModel, nodes, x: PartialLabeling) -> tuple[int, ...]:
    subset = tuple(sorted(set(int(v) for v in nodes)))
    if not x.covers(subset):
        raise InvalidLabelingError("labeling does not cover the claimed subset")
    x.validate(model)
    return subset


def verify_persistent(
    model: GraphicalModel, nodes, x: PartialLabeling, cap: int = ENUMERATION_CAP
) -> OracleReport:
    """Does some global optimum agree with x on the subset?"""
    subset = _validated_subset(model, nodes, x)
    _, _, optima = solve_bruteforce(model, cap)
    for o in optima:
        if all(o[v] == x.label_of(v) for v in subset):
            return OracleReport("persistent", True, None, len(optima))
    return OracleReport("persistent", False, optima[0], len(optima))


def verify_strongly_persistent(
    model: GraphicalModel, nodes, x: PartialLabeling, cap: int = ENUMERATION_CAP
) -> OracleReport:
    """Does every global optimum agree with x on the subset?"""
    subset = _validated_subset(model, nodes, x)
    _, _, optima = solve_bruteforce(model, cap)
    for o in optima:
        if any(o[v] != x.label_of(v) for v in subset):
            return OracleReport("strongly-persistent", False, o, len(optima))
    return OracleReport("strongly-persistent", True, None, len(optima))


def verify_improving(
    model: GraphicalModel, nodes, y: Labeling, cap: int = ENUMERATION_CAP
) -> tuple[OracleReport, OracleReport]:
    """Check the all-to-one relabeling (A -> y) by full enumeration.

    The mapping improves when no labeling gains energy from the relabeling
    (the minimum of E(x) - E(p(x)) is then exactly 0, attained by fixed
    points); it improves strictly when every non-fixed labeling loses
    strictly.  Returns (improving report, strictly-improving report).
    """
    subset = tuple(sorted(set(int(v) for v in nodes)))
    ys = model.validate_labeling(y)
    total = model.joint_space_size()
    if total > cap:
        raise StateSpaceCapError(f"state space {total} exceeds cap {cap}")

    cols = np.array(subset, dtype=np.int64)
    worst = None  # most negative improvement, with witness
    tie_breaker = None  # non-fixed labeling with ~zero improvement
    for start in range(0, total, _CHUNK):
        block = _labelings_block(model, start, min(start + _CHUNK, total))
        mapped = block.copy()
        if cols.size:
            mapped[:, cols] = np.array([ys[v] for v in subset], dtype=np.int64)[None, :]
        gain = energies_of(model, block) - energies_of(model, mapped)
        moved = (
            (block[:, cols] != mapped[:, cols]).any(axis=1)
            if cols.size
            else np.zeros(block.shape[0], dtype=bool)
        )
        i = int(np.argmin(gain))
        if worst is None or gain[i] < worst[0]:
            worst = (float(gain[i]), tuple(int(l) for l in block[i]))
        near_zero = moved & (gain <= TIE_TOL)
        if tie_breaker is None and near_zero.any():
            j = int(np.flatnonzero(near_zero)[0])
            tie_breaker = tuple(int(l) for l in block[j])

    improving = worst[0] >= -TIE_TOL
    improving_report = OracleReport(
        "improving", improving, None if improving else worst[1], 0
    )
    strict = improving and tie_breaker is None
    strict_report = OracleReport(
        "strictly-improving",
        strict,
        None if strict else (tie_breaker if improving else worst[1]),
        0,
    )
    return improving_report, strict_report
