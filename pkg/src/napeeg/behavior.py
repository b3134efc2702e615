"""Memory task scoring: word pairs, picture recognition, location recall.

Word-pair answers count as correct on an exact normalized match, a
single-edit typo (Damerau-Levenshtein distance 1), or an explicit accept
override; an explicit reject override always wins, which is how
derivation mistakes are marked as errors.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import Session, Task, ValidationError


class UndefinedScoreError(ValueError):
    """Score has no defined value for this response set (reported missing)."""


@dataclass(frozen=True)
class WordPairResponse:
    cue: str
    target: str
    response: str  # empty string counts incorrect unless adjudicated
    adjudication: str | None = None  # "accept" | "reject"

    def __post_init__(self) -> None:
        if self.adjudication not in (None, "accept", "reject"):
            raise ValidationError(
                f"adjudication must be accept/reject, got {self.adjudication!r}"
            )


@dataclass(frozen=True)
class RecognitionResponse:
    """One old/new judgement, with quadrant answers for location memory."""

    stimulus_id: str
    is_old: bool
    answered_old: bool
    location_truth: int | None = None  # quadrant 1-4, old items only
    location_answer: int | None = None

    def __post_init__(self) -> None:
        if self.location_answer is not None and not self.answered_old:
            raise ValidationError(
                "location_answer present although the item was not answered old"
            )
        for q in (self.location_truth, self.location_answer):
            if q is not None and q not in (1, 2, 3, 4):
                raise ValidationError(f"quadrant must be in 1..4, got {q}")


@dataclass(frozen=True)
class MemoryScore:
    task: Task
    session: Session
    value: float
    n_items: int

    def __post_init__(self) -> None:
        lo, hi = {
            Task.WORD_PAIRS: (0.0, float(self.n_items)),
            Task.PICTURE: (0.0, 2.0),
            Task.LOCATION: (-1.0, 1.0),
        }[self.task]
        if not lo <= self.value <= hi:
            raise ValidationError(
                f"{self.task.value} score {self.value} outside [{lo}, {hi}]"
            )


def damerau_levenshtein(a: str, b: str) -> int:
    """Optimal string alignment distance (edits + adjacent transpositions)."""
    if a == b:
        return 0
    la, lb = len(a), len(b)
    if la == 0 or lb == 0:
        return la + lb
    prev2: list[int] = []
    prev = list(range(lb + 1))
    for i in range(1, la + 1):
        cur = [i] + [0] * lb
        for j in range(1, lb + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
            if (
                i > 1
                and j > 1
                and a[i - 1] == b[j - 2]
                and a[i - 2] == b[j - 1]
            ):
                cur[j] = min(cur[j], prev2[j - 2] + cost)
        prev2, prev = prev, cur
    return prev[lb]


def _normalize(word: str) -> str:
    return word.strip().lower()


def word_pair_correct(resp: WordPairResponse) -> bool:
    if resp.adjudication == "reject":
        return False
    if resp.adjudication == "accept":
        return True
    answer = _normalize(resp.response)
    if not answer:
        return False
    target = _normalize(resp.target)
    return answer == target or damerau_levenshtein(answer, target) <= 1


def score_word_pairs(
    responses: list[WordPairResponse], session: Session = Session.IMMEDIATE
) -> MemoryScore:
    """Count correctly recalled words (typo rule and overrides applied)."""
    if not responses:
        raise ValidationError("word-pairs scoring needs at least one response")
    value = sum(word_pair_correct(r) for r in responses)
    return MemoryScore(
        task=Task.WORD_PAIRS,
        session=session,
        value=float(value),
        n_items=len(responses),
    )


def score_picture(
    responses: list[RecognitionResponse], session: Session = Session.IMMEDIATE
) -> MemoryScore:
    """Proportion of correct old responses plus proportion of correct new."""
    old = [r for r in responses if r.is_old]
    new = [r for r in responses if not r.is_old]
    if not old or not new:
        raise ValidationError("picture scoring needs both old and new items")
    correct_old = sum(r.answered_old for r in old)
    correct_new = sum(not r.answered_old for r in new)
    return MemoryScore(
        task=Task.PICTURE,
        session=session,
        value=correct_old / len(old) + correct_new / len(new),
        n_items=len(responses),
    )


def score_location(
    responses: list[RecognitionResponse], session: Session = Session.IMMEDIATE
) -> MemoryScore:
    """(correctly placed - falsely placed) / correctly recognized old items.

    Raises UndefinedScoreError when no old item was recognized, so callers
    can report the cell as missing instead of propagating a bogus number.
    """
    hits = [r for r in responses if r.is_old and r.answered_old]
    if not hits:
        raise UndefinedScoreError(
            "location score undefined: no correct old responses"
        )
    correct = sum(
        r.location_answer is not None and r.location_answer == r.location_truth
        for r in hits
    )
    false = sum(
        r.location_answer is not None and r.location_answer != r.location_truth
        for r in hits
    )
    return MemoryScore(
        task=Task.LOCATION,
        session=session,
        value=(correct - false) / len(hits),
        n_items=len(hits),
    )


def performance_diff(immediate: MemoryScore, delayed: MemoryScore) -> float:
    """Delayed minus immediate score; positive means consolidation gain."""
    if immediate.task != delayed.task:
        raise ValidationError(
            f"task mismatch: {immediate.task.value} vs {delayed.task.value}"
        )
    return delayed.value - immediate.value
