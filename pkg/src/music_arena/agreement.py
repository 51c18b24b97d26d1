"""Weighted inter-annotator agreement over paired seven-option judgments.

Two agreement kernels are supported, both defined on the five comparative
options only (pairs touching NONE or NOT_APPLICABLE are excluded before any
statistic is computed):

* distance: credit decays by thirds with the gap between the two answers on
  the five-point scale (gap clipped at 3), except that two answers strictly
  preferring the same side ("much better" next to "better") count as full
  agreement;
* direction: binary, zero only when the two annotators strictly prefer
  opposite sides.

The kernels are stored as explicit 5x5 tables, which are the source of
truth; the chance-corrected statistic generalises Cohen's kappa with
expected agreement taken under the product of the two annotators' empirical
marginals (an interpretation: see KappaReport notes in the README).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import (
    EmptySampleError,
    InvalidArgumentError,
    UndefinedKappaError,
)
from .judgments import COMPARATIVE_OPTIONS, JudgmentOption

DISTANCE = "distance"
DIRECTION = "direction"

_THIRD = 1.0 / 3.0
_TWO_THIRDS = 2.0 / 3.0

# Rows/columns in COMPARATIVE_OPTIONS order: A>>B, A>B, A=B, A<B, A<<B.
_DISTANCE_CELLS: tuple[tuple[float, ...], ...] = (
    (1.0, 1.0, _THIRD, 0.0, 0.0),
    (1.0, 1.0, _TWO_THIRDS, _THIRD, 0.0),
    (_THIRD, _TWO_THIRDS, 1.0, _TWO_THIRDS, _THIRD),
    (0.0, _THIRD, _TWO_THIRDS, 1.0, 1.0),
    (0.0, 0.0, _THIRD, 1.0, 1.0),
)

_DIRECTION_CELLS: tuple[tuple[float, ...], ...] = (
    (1.0, 1.0, 1.0, 0.0, 0.0),
    (1.0, 1.0, 1.0, 0.0, 0.0),
    (1.0, 1.0, 1.0, 1.0, 1.0),
    (0.0, 0.0, 1.0, 1.0, 1.0),
    (0.0, 0.0, 1.0, 1.0, 1.0),
)

_INDEX = {option: i for i, option in enumerate(COMPARATIVE_OPTIONS)}


@dataclass(frozen=True)
class AgreementMatrix:
    """A symmetric 5x5 agreement kernel over the comparative options."""

    kind: str
    cells: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        if len(self.cells) != 5 or any(len(row) != 5 for row in self.cells):
            raise InvalidArgumentError("agreement kernel must be 5x5")
        thirds: list[tuple[int, ...]] = []
        for i in range(5):
            if self.cells[i][i] != 1.0:
                raise InvalidArgumentError("agreement kernel diagonal must be 1")
            row: list[int] = []
            for j in range(5):
                if self.cells[i][j] != self.cells[j][i]:
                    raise InvalidArgumentError("agreement kernel must be symmetric")
                scaled = round(self.cells[i][j] * 3)
                if abs(self.cells[i][j] * 3 - scaled) > 1e-9:
                    raise InvalidArgumentError(
                        "agreement kernel cells must be multiples of 1/3"
                    )
                row.append(scaled)
            thirds.append(tuple(row))
        # Integer view of the kernel (cells * 3) for exact chance agreement.
        object.__setattr__(self, "_thirds", tuple(thirds))

    def score(self, a: JudgmentOption, b: JudgmentOption) -> float:
        """Kernel value for a pair of comparative judgments."""
        if not a.is_comparative or not b.is_comparative:
            raise InvalidArgumentError(
                "agreement is only defined for the five comparative options; "
                "filter NONE / NOT_APPLICABLE pairs out first"
            )
        return self.cells[_INDEX[a]][_INDEX[b]]

    @classmethod
    def distance(cls) -> "AgreementMatrix":
        return cls(DISTANCE, _DISTANCE_CELLS)

    @classmethod
    def direction(cls) -> "AgreementMatrix":
        return cls(DIRECTION, _DIRECTION_CELLS)

    @classmethod
    def of_kind(cls, kind: str) -> "AgreementMatrix":
        if kind == DISTANCE:
            return cls.distance()
        if kind == DIRECTION:
            return cls.direction()
        raise InvalidArgumentError(f"unknown kernel kind {kind!r}")


def distance_agreement(a: JudgmentOption, b: JudgmentOption) -> float:
    """Distance-kernel agreement between two comparative judgments."""
    return AgreementMatrix.distance().score(a, b)


def direction_agreement(a: JudgmentOption, b: JudgmentOption) -> float:
    """Direction-kernel agreement: 0 only for reversed strict preferences."""
    return AgreementMatrix.direction().score(a, b)


@dataclass(frozen=True)
class KappaReport:
    """Chance-corrected agreement for one criterion under one kernel."""

    criterion: str | None
    kind: str
    p_o_mean: float
    p_e: float
    kappa: float
    n_items: int
    n_excluded: int


def kappa(
    pairs: Iterable[tuple[JudgmentOption, JudgmentOption]],
    matrix: AgreementMatrix,
    criterion: str | None = None,
) -> KappaReport:
    """Weighted kappa over paired judgments.

    Pairs where either annotator answered NONE or NOT_APPLICABLE are
    excluded and only counted in ``n_excluded``. Observed agreement is the
    mean kernel value over the remaining pairs; expected agreement is the
    kernel average under the product of the two empirical marginals.
    """
    included: list[tuple[JudgmentOption, JudgmentOption]] = []
    n_excluded = 0
    for a, b in pairs:
        if a.is_comparative and b.is_comparative:
            included.append((a, b))
        else:
            n_excluded += 1
    if not included:
        raise EmptySampleError(
            "no pairs left after excluding NONE / NOT_APPLICABLE answers"
        )
    n = len(included)
    p_o_mean = sum(matrix.score(a, b) for a, b in included) / n

    counts_a = [0] * 5
    counts_b = [0] * 5
    for a, b in included:
        counts_a[_INDEX[a]] += 1
        counts_b[_INDEX[b]] += 1
    # Exact integer arithmetic (kernel cells are thirds), so the undefined
    # boundary p_e = 1 is detected independently of summation order.
    thirds: tuple[tuple[int, ...], ...] = matrix._thirds  # type: ignore[attr-defined]
    numerator = sum(
        counts_a[i] * counts_b[j] * thirds[i][j]
        for i in range(5)
        for j in range(5)
    )
    if numerator == 3 * n * n:
        raise UndefinedKappaError(
            "expected agreement is 1; kappa is undefined when chance "
            "agreement is total (e.g. both annotators constant)"
        )
    p_e = numerator / (3.0 * n * n)
    value = (p_o_mean - p_e) / (1.0 - p_e)
    return KappaReport(
        criterion=criterion,
        kind=matrix.kind,
        p_o_mean=p_o_mean,
        p_e=p_e,
        kappa=value,
        n_items=n,
        n_excluded=n_excluded,
    )
