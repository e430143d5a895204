"""The persistency-percentage metric and machine-readable run reports."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .model import GraphicalModel, PartialLabeling
from .persistency import PersistencyResult


def persistency_percentage(model: GraphicalModel, nodes) -> float:
    """Label-space-weighted fraction of determined variables.

    1 - sum_{u not in A} log|X_u| / sum_u log|X_u|; single-label nodes
    contribute nothing to either sum (they carry no decision), and a model
    of only such nodes counts as fully determined.  The log base cancels.
    """
    inside = set(int(v) for v in nodes)
    total = sum(math.log(k) for k in model.label_counts if k >= 2)
    if total == 0.0:
        return 1.0
    outside = sum(
        math.log(k)
        for v, k in enumerate(model.label_counts)
        if k >= 2 and v not in inside
    )
    return 1.0 - outside / total


REPORT_FORMAT = "mapprune-report-v1"


@dataclass(frozen=True)
class RunReport:
    """Everything `verify` needs besides the model file itself.

    ``verification`` is filled when the brute-force oracle was run on the
    result (e.g. `prune --verify`): {"persistent": bool, "num_optima": int}.
    """

    instance: str
    solver: str
    mode: str
    a_star: tuple[int, ...]
    x_star: dict[int, int]
    percentage: float
    trace: list[dict]
    wall_time_s: float
    notes: tuple[str, ...] = ()
    verification: dict | None = None

    @classmethod
    def from_result(
        cls,
        instance: str,
        result: PersistencyResult,
        model: GraphicalModel,
        wall_time_s: float,
        verification: dict | None = None,
    ) -> "RunReport":
        return cls(
            instance=instance,
            solver=result.solver,
            mode=result.mode,
            a_star=result.a_star,
            x_star=result.x_star.as_mapping(),
            percentage=persistency_percentage(model, result.a_star),
            trace=result.to_json_dict()["trace"],
            wall_time_s=wall_time_s,
            notes=result.notes,
            verification=verification,
        )

    def to_json(self) -> str:
        payload = {
            "format": REPORT_FORMAT,
            "instance": self.instance,
            "solver": self.solver,
            "mode": self.mode,
            "a_star": list(self.a_star),
            "x_star": {str(v): int(l) for v, l in self.x_star.items()},
            "percentage": self.percentage,
            "trace": self.trace,
            "wall_time_s": self.wall_time_s,
            "notes": list(self.notes),
            "verification": self.verification,
        }
        return json.dumps(payload, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        payload = json.loads(text)
        if payload.get("format") != REPORT_FORMAT:
            raise ValueError(f"not a {REPORT_FORMAT} document")
        return cls(
            instance=payload["instance"],
            solver=payload["solver"],
            mode=payload["mode"],
            a_star=tuple(int(v) for v in payload["a_star"]),
            x_star={int(v): int(l) for v, l in payload["x_star"].items()},
            percentage=float(payload["percentage"]),
            trace=payload["trace"],
            wall_time_s=float(payload["wall_time_s"]),
            notes=tuple(payload.get("notes", ())),
            verification=payload.get("verification"),
        )

    def x_star_partial(self) -> PartialLabeling:
        return PartialLabeling.from_mapping(self.x_star)
