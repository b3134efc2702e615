import pytest
from hypothesis import given, strategies as st

from napeeg.behavior import (
    MemoryScore,
    RecognitionResponse,
    UndefinedScoreError,
    WordPairResponse,
    damerau_levenshtein,
    performance_diff,
    score_location,
    score_picture,
    score_word_pairs,
    word_pair_correct,
)
from napeeg.model import Session, Task, ValidationError


class TestDamerauLevenshtein:
    @pytest.mark.parametrize(
        "a,b,d",
        [
            ("festival", "festival", 0),
            ("festival", "festivall", 1),  # insertion
            ("festival", "festval", 1),  # deletion
            ("festival", "festivol", 1),  # substitution
            ("festival", "festivla", 1),  # transposition
            ("festival", "festive", 2),
            ("", "abc", 3),
            ("abc", "", 3),
        ],
    )
    def test_known_distances(self, a, b, d):
        assert damerau_levenshtein(a, b) == d

    @given(st.text(max_size=8), st.text(max_size=8))
    def test_symmetry_and_identity(self, a, b):
        assert damerau_levenshtein(a, b) == damerau_levenshtein(b, a)
        assert damerau_levenshtein(a, a) == 0


class TestWordPairs:
    def test_exact_match(self):
        resp = WordPairResponse("event", "festival", "festival")
        assert word_pair_correct(resp)

    def test_typo_distance_one(self):
        resp = WordPairResponse("event", "festival", "festivall")
        assert word_pair_correct(resp)

    def test_case_and_whitespace_normalized(self):
        resp = WordPairResponse("event", "Festival", "  FESTIVAL ")
        assert word_pair_correct(resp)

    def test_reject_override_wins(self):
        resp = WordPairResponse("event", "festival", "festivall", adjudication="reject")
        assert not word_pair_correct(resp)

    def test_derivation_rejected(self):
        resp = WordPairResponse("event", "festival", "festive", adjudication="reject")
        assert not word_pair_correct(resp)

    def test_accept_override(self):
        resp = WordPairResponse("event", "festival", "fest", adjudication="accept")
        assert word_pair_correct(resp)

    def test_empty_response_incorrect(self):
        assert not word_pair_correct(WordPairResponse("event", "festival", ""))

    def test_score_counts(self):
        responses = [
            WordPairResponse("a", "apple", "apple"),
            WordPairResponse("b", "pear", "per"),  # distance 1
            WordPairResponse("c", "plum", ""),
            WordPairResponse("d", "grape", "melon"),
        ]
        score = score_word_pairs(responses, Session.IMMEDIATE)
        assert score.value == 2.0
        assert score.n_items == 4
        assert score.task == Task.WORD_PAIRS

    def test_empty_list_refused(self):
        with pytest.raises(ValidationError):
            score_word_pairs([])

    @given(seed=st.integers(0, 100))
    def test_order_invariance(self, seed):
        import random

        responses = [
            WordPairResponse(f"c{i}", f"target{i}", f"target{i}" if i % 2 else "x")
            for i in range(10)
        ]
        shuffled = responses[:]
        random.Random(seed).shuffle(shuffled)
        assert (
            score_word_pairs(responses).value == score_word_pairs(shuffled).value
        )


def recognition_set(n_old, n_new, correct_old, correct_new, correct_loc=0, false_loc=0):
    out = []
    for k in range(n_old):
        answered = k < correct_old
        if answered and k < correct_loc:
            answer = k % 4 + 1
        elif answered and k < correct_loc + false_loc:
            answer = (k % 4 + 1) % 4 + 1
        elif answered:
            answer = None
        else:
            answer = None
        out.append(
            RecognitionResponse(
                stimulus_id=f"old{k}",
                is_old=True,
                answered_old=answered,
                location_truth=k % 4 + 1,
                location_answer=answer,
            )
        )
    for k in range(n_new):
        out.append(
            RecognitionResponse(
                stimulus_id=f"new{k}", is_old=False, answered_old=k >= correct_new
            )
        )
    return out


class TestPicture:
    def test_perfect_score_is_two(self):
        responses = recognition_set(38, 38, 38, 38)
        assert score_picture(responses).value == pytest.approx(2.0)

    def test_paper_formula_arithmetic(self):
        responses = recognition_set(38, 38, 30, 34)
        assert score_picture(responses).value == pytest.approx(
            30 / 38 + 34 / 38, abs=1e-12
        )
        assert score_picture(responses).value == pytest.approx(1.6842, abs=1e-4)

    def test_all_answered_old_bias(self):
        responses = recognition_set(38, 38, 38, 0)
        assert score_picture(responses).value == pytest.approx(1.0)

    def test_needs_both_item_kinds(self):
        with pytest.raises(ValidationError, match="old and new"):
            score_picture(recognition_set(10, 0, 5, 0))

    def test_relabeling_invariance_and_bounds(self):
        responses = recognition_set(20, 20, 13, 17)
        base = score_picture(responses).value
        relabeled = [
            RecognitionResponse(
                stimulus_id=f"zzz{i}",
                is_old=r.is_old,
                answered_old=r.answered_old,
                location_truth=r.location_truth,
                location_answer=r.location_answer,
            )
            for i, r in enumerate(responses)
        ]
        assert score_picture(relabeled).value == base
        assert 0.0 <= base <= 2.0


class TestLocation:
    def test_paper_formula_arithmetic(self):
        responses = recognition_set(38, 10, 25, 10, correct_loc=20, false_loc=5)
        assert score_location(responses).value == pytest.approx(0.6)

    def test_all_correct_extreme(self):
        responses = recognition_set(10, 5, 8, 5, correct_loc=8)
        assert score_location(responses).value == pytest.approx(1.0)

    def test_all_wrong_extreme(self):
        responses = recognition_set(10, 5, 8, 5, correct_loc=0, false_loc=8)
        assert score_location(responses).value == pytest.approx(-1.0)

    def test_undefined_without_correct_old(self):
        responses = recognition_set(10, 5, 0, 5)
        with pytest.raises(UndefinedScoreError):
            score_location(responses)

    def test_adding_correct_item_never_decreases(self):
        base = recognition_set(10, 5, 6, 5, correct_loc=3, false_loc=3)
        before = score_location(base).value
        extra = base + [
            RecognitionResponse(
                stimulus_id="bonus",
                is_old=True,
                answered_old=True,
                location_truth=1,
                location_answer=1,
            )
        ]
        assert score_location(extra).value >= before

    def test_bounds(self):
        for correct in range(0, 9):
            responses = recognition_set(
                10, 5, 8, 5, correct_loc=correct, false_loc=8 - correct
            )
            assert -1.0 <= score_location(responses).value <= 1.0


class TestPerformanceDiff:
    def _score(self, task, session, value, n=10):
        return MemoryScore(task=task, session=session, value=value, n_items=n)

    def test_gain(self):
        imm = self._score(Task.LOCATION, Session.IMMEDIATE, 0.6)
        dela = self._score(Task.LOCATION, Session.DELAYED, 0.8)
        assert performance_diff(imm, dela) == pytest.approx(0.2)

    def test_identity(self):
        imm = self._score(Task.PICTURE, Session.IMMEDIATE, 1.5)
        dela = self._score(Task.PICTURE, Session.DELAYED, 1.5)
        assert performance_diff(imm, dela) == 0.0

    def test_loss(self):
        imm = self._score(Task.PICTURE, Session.IMMEDIATE, 1.68)
        dela = self._score(Task.PICTURE, Session.DELAYED, 1.60)
        assert performance_diff(imm, dela) == pytest.approx(-0.08)

    def test_task_mismatch(self):
        imm = self._score(Task.PICTURE, Session.IMMEDIATE, 1.0)
        dela = self._score(Task.LOCATION, Session.DELAYED, 0.5)
        with pytest.raises(ValidationError, match="task mismatch"):
            performance_diff(imm, dela)


class TestInvariantsOfTypes:
    def test_location_answer_requires_answered_old(self):
        with pytest.raises(ValidationError):
            RecognitionResponse(
                stimulus_id="x", is_old=True, answered_old=False, location_answer=2
            )

    def test_quadrant_range(self):
        with pytest.raises(ValidationError):
            RecognitionResponse(
                stimulus_id="x",
                is_old=True,
                answered_old=True,
                location_truth=5,
                location_answer=1,
            )

    def test_score_range_validation(self):
        with pytest.raises(ValidationError):
            MemoryScore(task=Task.LOCATION, session=Session.IMMEDIATE, value=1.5, n_items=5)
        with pytest.raises(ValidationError):
            MemoryScore(task=Task.PICTURE, session=Session.IMMEDIATE, value=2.5, n_items=5)
