"""Shared vocabulary for the pairwise evaluation protocol.

Annotators compare two anonymised clips (A and B in system space, Left and
Right on screen) on five criteria, answering each with one of seven options.
The first five options form an ordinal preference scale; ``NONE`` and
``NOT_APPLICABLE`` opt out of the comparison.
"""

from __future__ import annotations

import enum

from .errors import InvalidArgumentError


class Criterion(enum.Enum):
    """The five comparison questions asked per match."""

    OVERALL = "OA"
    INSTRUMENT = "Inst"
    MELODY = "MC"
    RHYTHM = "RC"
    CREATIVITY = "CR"

    @classmethod
    def parse(cls, token: str) -> "Criterion":
        for c in cls:
            if token == c.value or token.lower() == c.value.lower():
                return c
        raise InvalidArgumentError(
            f"unknown criterion {token!r}; expected one of "
            + ", ".join(c.value for c in cls)
        )


class QueryType(enum.Enum):
    """Evaluation query tiers, from reproduction to cross-genre blending."""

    RECALL = "recall"
    ANALYSIS = "analysis"
    CREATIVITY = "creativity"

    @classmethod
    def parse(cls, token: str) -> "QueryType":
        try:
            return cls(token.lower())
        except ValueError:
            raise InvalidArgumentError(
                f"unknown query type {token!r}; expected one of "
                + ", ".join(q.value for q in cls)
            ) from None


class JudgmentOption(enum.Enum):
    """One annotator's answer to one criterion, in system (A/B) space."""

    A_MUCH_BETTER = "A>>B"
    A_BETTER = "A>B"
    EQUAL = "A=B"
    B_BETTER = "A<B"
    B_MUCH_BETTER = "A<<B"
    NONE = "None"
    NOT_APPLICABLE = "NA"

    @property
    def is_comparative(self) -> bool:
        """True for the five scale options, False for NONE / NOT_APPLICABLE."""
        return self in _ORDINALS

    @property
    def ordinal(self) -> int:
        """Scale position: +2 (A much better) down to -2 (B much better)."""
        try:
            return _ORDINALS[self]
        except KeyError:
            raise InvalidArgumentError(
                f"{self.value!r} has no ordinal; only the five comparative "
                "options sit on the preference scale"
            ) from None

    def mirrored(self) -> "JudgmentOption":
        """The same judgment with the roles of A and B swapped."""
        return _MIRROR[self]

    @classmethod
    def parse(cls, token: str) -> "JudgmentOption":
        try:
            return cls(token)
        except ValueError:
            raise InvalidArgumentError(
                f"unknown judgment {token!r}; expected one of "
                + ", ".join(o.value for o in cls)
            ) from None


#: The five scale options in descending order of preference for A.
COMPARATIVE_OPTIONS: tuple[JudgmentOption, ...] = (
    JudgmentOption.A_MUCH_BETTER,
    JudgmentOption.A_BETTER,
    JudgmentOption.EQUAL,
    JudgmentOption.B_BETTER,
    JudgmentOption.B_MUCH_BETTER,
)

_ORDINALS = {
    JudgmentOption.A_MUCH_BETTER: 2,
    JudgmentOption.A_BETTER: 1,
    JudgmentOption.EQUAL: 0,
    JudgmentOption.B_BETTER: -1,
    JudgmentOption.B_MUCH_BETTER: -2,
}

_MIRROR = {
    JudgmentOption.A_MUCH_BETTER: JudgmentOption.B_MUCH_BETTER,
    JudgmentOption.A_BETTER: JudgmentOption.B_BETTER,
    JudgmentOption.EQUAL: JudgmentOption.EQUAL,
    JudgmentOption.B_BETTER: JudgmentOption.A_BETTER,
    JudgmentOption.B_MUCH_BETTER: JudgmentOption.A_MUCH_BETTER,
    JudgmentOption.NONE: JudgmentOption.NONE,
    JudgmentOption.NOT_APPLICABLE: JudgmentOption.NOT_APPLICABLE,
}

# Wire tokens used by the annotation UI, which only ever sees Left/Right.
_LEFT_RIGHT_TO_LEFT_IS_A = {
    "L>>R": JudgmentOption.A_MUCH_BETTER,
    "L>R": JudgmentOption.A_BETTER,
    "L=R": JudgmentOption.EQUAL,
    "L<R": JudgmentOption.B_BETTER,
    "L<<R": JudgmentOption.B_MUCH_BETTER,
    "None": JudgmentOption.NONE,
    "NA": JudgmentOption.NOT_APPLICABLE,
}

#: Answer tokens accepted on the annotation wire, in display order.
LEFT_RIGHT_TOKENS: tuple[str, ...] = tuple(_LEFT_RIGHT_TO_LEFT_IS_A)


def judgment_from_left_right(token: str, presented_left: str) -> JudgmentOption:
    """Map a Left/Right answer into system space.

    ``presented_left`` is ``"a"`` or ``"b"``, the system shown on the left
    of the blinded interface. Answers about Left/Right are converted so the
    stored judgment always speaks about systems A and B.
    """
    try:
        as_if_left_is_a = _LEFT_RIGHT_TO_LEFT_IS_A[token]
    except KeyError:
        raise InvalidArgumentError(
            f"unknown answer token {token!r}; expected one of "
            + ", ".join(LEFT_RIGHT_TOKENS)
        ) from None
    if presented_left == "a":
        return as_if_left_is_a
    if presented_left == "b":
        return as_if_left_is_a.mirrored()
    raise InvalidArgumentError(f"presented_left must be 'a' or 'b', got {presented_left!r}")
