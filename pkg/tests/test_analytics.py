"""Tests for the closed-form and recursive count predictions."""

from __future__ import annotations

import pytest

from devstone.analytics import (
    COUNT_LIMIT,
    HomodRecursion,
    atomic_count,
    hi_transitions_closed,
    hi_transitions_sum,
    homem_event_count,
    homod_event_count,
    homod_event_terms,
    homod_transitions,
    predict,
)
from devstone.errors import CountOverflowError
from devstone.models import BenchmarkSpec, Family


def _predict(family: Family, w: int, d: int, n: int = 1):
    return predict(BenchmarkSpec(family=family, width=w, depth=d, n_events=n))


class TestAnchors:
    def test_li_4_3(self):
        p = _predict(Family.LI, 4, 3)
        assert (p.n_atomics, *p.counter_tuple()) == (7, 7, 7, 7)

    @pytest.mark.parametrize("family", [Family.HI, Family.HO])
    def test_hi_ho_4_3(self, family):
        p = _predict(family, 4, 3)
        assert (p.n_atomics, *p.counter_tuple()) == (7, 13, 13, 13)

    def test_homod_2_2(self):
        p = _predict(Family.HOMOD, 2, 2)
        assert (p.n_atomics, *p.counter_tuple()) == (3, 4, 4, 4)

    def test_homem_3_3_events(self):
        assert _predict(Family.HOMEM, 3, 3).n_events == 31

    def test_atomic_counts_3_2(self):
        assert atomic_count(Family.HOMOD, 3, 2) == 6
        assert atomic_count(Family.HOMEM, 3, 2) == 5

    def test_full_scale_li(self):
        assert atomic_count(Family.LI, 1502, 1501) == 2_251_501

    def test_desk_scale_li(self):
        p = _predict(Family.LI, 502, 501)
        assert p.counter_tuple() == (250_501, 250_501, 250_501)


class TestHI:
    @pytest.mark.parametrize("width", range(2, 12))
    @pytest.mark.parametrize("depth", range(1, 12))
    def test_closed_form_equals_sum(self, width, depth):
        assert hi_transitions_closed(width, depth) == hi_transitions_sum(width, depth)

    def test_width_two_is_li(self):
        assert hi_transitions_closed(2, 5) == atomic_count(Family.LI, 2, 5)


class TestHomod:
    def test_event_counts(self):
        assert homod_event_count(2, 2) == 4
        assert homod_event_count(3, 2) == 10
        assert homod_event_count(3, 3) == 64

    def test_terms_of_2_2(self):
        assert homod_event_terms(2, 2) == [(1, 1, 2), (1, 2, 1)]

    def test_transitions(self):
        assert homod_transitions(2, 2) == 4
        assert homod_transitions(3, 2) == 10
        assert homod_transitions(3, 3) == 29

    def test_recursion_helpers(self):
        rec = HomodRecursion(3)
        assert [rec.W(i) for i in range(1, 5)] == [2, 1, 0, 0]
        assert [rec.K(level) for level in (1, 2, 3)] == [1, 3, 5]
        assert [rec.P(2, j) for j in range(0, 5)] == [0, 2, 2, 2, 0]
        assert rec.window(2, 2) == [2, 2, 0]

    def test_depth_one(self):
        assert homod_event_terms(5, 1) == []
        assert homod_event_count(5, 1) == 1


class TestHomem:
    def test_depth_two_closed_form(self):
        for w in range(2, 8):
            assert homem_event_count(w, 2) == 1 + (w - 1) ** 2 + (w - 1)

    def test_width_two_is_linear(self):
        for d in range(1, 8):
            assert homem_event_count(2, d) == 2 * (d - 1) + 1

    def test_3_2(self):
        assert homem_event_count(3, 2) == 7


class TestPredict:
    @pytest.mark.parametrize("family", list(Family))
    def test_depth_one_is_single_atomic(self, family):
        p = _predict(family, 7, 1)
        assert (p.n_atomics, *p.counter_tuple()) == (1, 1, 1, 1)

    @pytest.mark.parametrize("family", list(Family))
    def test_scales_with_events_but_not_atomics(self, family):
        one = _predict(family, 4, 4)
        five = _predict(family, 4, 4, n=5)
        assert five.n_atomics == one.n_atomics
        assert five.counter_tuple() == tuple(5 * c for c in one.counter_tuple())

    def test_overflow_is_reported(self):
        with pytest.raises(CountOverflowError):
            _predict(Family.HOMEM, 10**6, 10)

    def test_limit_is_signed_128_bit(self):
        assert COUNT_LIMIT == 2**127 - 1
