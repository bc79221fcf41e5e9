import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sample_prophet import distributions as D
from sample_prophet.core_game import OrderPolicy
from sample_prophet.exact_analysis import (
    CapExceeded,
    DrawTable,
    assignment_averaged_performance,
    brute_force_over_assignments,
    brute_force_via_game,
    closed_form_alg_value,
    closed_form_expected_max,
    exact_finite_support_performance,
    find_repeat_structure,
    is_dyadic_unit,
    random_table,
    selection_probabilities,
    verify_instance,
)

F = Fraction
ONE = DrawTable.from_values([(4, 2)])
TWO = DrawTable.from_values([(8, 1), (4, 2)])


def hand_enumeration(table):
    """Direct average over coin vectors with plain max/min, no tags needed
    when all values are distinct."""
    n = table.n
    tot_max = tot_alg = F(0)
    for coins in itertools.product((0, 1), repeat=n):
        S = [table.draws[i][c] for i, c in enumerate(coins)]
        R = [table.draws[i][1 - c] for i, c in enumerate(coins)]
        tot_max += max(R)
        above = [r for r in R if r > max(S)]
        tot_alg += min(above) if above else 0
    return tot_max / 2**n, tot_alg / 2**n


@st.composite
def tables(draw, max_n=7):
    n = draw(st.integers(1, max_n))
    vals = draw(st.lists(st.fractions(min_value=0, max_value=50, max_denominator=6), min_size=2 * n, max_size=2 * n))
    perm = draw(st.permutations(range(2 * n)))
    tags = [F(p + 1, 2 * n + 1) for p in perm]
    return DrawTable(
        tuple((vals[2 * i], vals[2 * i + 1]) for i in range(n)),
        tuple((tags[2 * i], tags[2 * i + 1]) for i in range(n)),
    )


class TestRepeatStructure:
    def test_single(self):
        rs = find_repeat_structure(ONE)
        assert rs.repeat_value.value == 2 and rs.repeat_pair.value == 4
        assert [e.value for e in rs.T] == [4]

    def test_two_distributions(self):
        rs = find_repeat_structure(TWO)
        assert [e.value for e in rs.sorted] == [8, 4, 2, 1]
        assert rs.repeat_value.value == 2 and rs.repeat_value.dist_index == 1
        assert [e.value for e in rs.T] == [8, 4]
        assert rs.above_counts == (0, 1)

    def test_top_two_share_distribution(self):
        rs = find_repeat_structure(DrawTable.from_values([(8, 7), (3, 1)]))
        assert rs.repeat_value.value == 7
        assert [e.value for e in rs.T] == [8]

    @given(tables())
    def test_structural_invariants(self, table):
        rs = find_repeat_structure(table)
        assert rs.repeat_pair in rs.T
        assert rs.repeat_pair.dist_index == rs.repeat_value.dist_index
        assert rs.repeat_pair.key > rs.repeat_value.key
        assert len({e.dist_index for e in rs.T}) == len(rs.T)
        assert 1 <= len(rs.T) <= table.n


class TestClosedForms:
    def test_expected_max_examples(self):
        assert closed_form_expected_max(find_repeat_structure(ONE)) == 3
        assert closed_form_expected_max(find_repeat_structure(TWO)) == F(11, 2)
        assert hand_enumeration(ONE)[0] == 3
        assert hand_enumeration(TWO)[0] == F(8 + 8 + 4 + 2, 4)

    def test_alg_examples(self):
        assert closed_form_alg_value(find_repeat_structure(ONE)) == 2
        assert closed_form_alg_value(find_repeat_structure(TWO)) == 3
        assert hand_enumeration(ONE)[1] == 2
        assert hand_enumeration(TWO)[1] == F(4 + 8 + 0 + 0, 4)

    def test_all_equal_values(self):
        t = DrawTable.from_values([(5, 5), (5, 5), (5, 5)])
        assert closed_form_expected_max(find_repeat_structure(t)) == 5

    def test_singleton_T(self):
        t = DrawTable.from_values([(9, 6), (2, 1), (3, 0)])
        rs = find_repeat_structure(t)
        assert len(rs.T) == 1
        assert closed_form_alg_value(rs) == F(1, 2) * rs.repeat_pair.value

    def test_distinct_values_against_hand_enumeration(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            n = int(rng.integers(1, 7))
            vals = rng.choice(1000, size=2 * n, replace=False)
            t = DrawTable.from_values([(int(vals[2 * i]), int(vals[2 * i + 1])) for i in range(n)])
            rs = find_repeat_structure(t)
            assert (closed_form_expected_max(rs), closed_form_alg_value(rs)) == hand_enumeration(t)


class TestSelectionProbabilities:
    def test_two_distribution_example(self):
        prof = selection_probabilities(TWO)
        assert prof.Y == {(0, 0): F(1, 2), (1, 0): F(1, 4), (1, 1): F(1, 4), (0, 1): 0}
        assert prof.Z == {(0, 0): F(1, 4), (1, 0): F(1, 4), (1, 1): 0, (0, 1): 0}
        assert sum(prof.Z.values()) == F(1, 2)

    def test_single_example(self):
        prof = selection_probabilities(ONE)
        assert prof.Y == {(0, 0): F(1, 2), (0, 1): F(1, 2)}
        assert prof.Z == {(0, 0): F(1, 2), (0, 1): 0}


class TestOracle:
    def test_single(self):
        o = brute_force_over_assignments(ONE)
        assert (o.expected_max, o.expected_worst_case_alg) == (3, 2)
        assert o.Y == selection_probabilities(ONE).Y and o.Z == selection_probabilities(ONE).Z

    def test_two(self):
        o = brute_force_over_assignments(TWO)
        assert (o.expected_max, o.expected_worst_case_alg) == (F(11, 2), 3)

    def test_rank_enumeration_matches_game_enumeration(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            t = random_table(int(rng.integers(1, 8)), rng, max_num=4, max_den=2)
            assert brute_force_over_assignments(t) == brute_force_via_game(t)

    def test_cap(self):
        t = random_table(5, np.random.default_rng(0))
        with pytest.raises(CapExceeded):
            brute_force_over_assignments(t, cap=4)

    def test_table_rejects_duplicate_keys(self):
        with pytest.raises(ValueError):
            DrawTable.from_values([(1, 1)], tags=[(F(1, 2), F(1, 2))])


class TestProperties:
    @settings(max_examples=300, deadline=None)
    @given(tables())
    def test_closed_forms_equal_oracle(self, table):
        rep = verify_instance(table)
        assert rep.passed, rep.checks

    @settings(max_examples=100, deadline=None)
    @given(tables(), st.fractions(min_value=F(1, 10), max_value=10, max_denominator=10))
    def test_positive_scaling(self, table, lam):
        scaled = DrawTable(tuple((lam * a, lam * b) for a, b in table.draws), table.tags)
        rs, rs2 = find_repeat_structure(table), find_repeat_structure(scaled)
        assert closed_form_expected_max(rs2) == lam * closed_form_expected_max(rs)
        assert closed_form_alg_value(rs2) == lam * closed_form_alg_value(rs)
        assert selection_probabilities(scaled) == selection_probabilities(table)

    @settings(max_examples=100, deadline=None)
    @given(tables())
    def test_monotone_relabel(self, table):
        f = lambda x: x**3 + 2 * x + 1
        mapped = DrawTable(tuple((f(a), f(b)) for a, b in table.draws), table.tags)
        a, b = find_repeat_structure(table), find_repeat_structure(mapped)
        assert [e.ident for e in a.T] == [e.ident for e in b.T]
        assert a.above_counts == b.above_counts
        assert a.repeat_value.ident == b.repeat_value.ident
        assert a.repeat_pair.ident == b.repeat_pair.ident

    @settings(max_examples=200, deadline=None)
    @given(tables())
    def test_below_repeat_never_max_or_selected(self, table):
        rs = find_repeat_structure(table)
        prof = selection_probabilities(table)
        below = rs.sorted[len(rs.T) + 1:]
        assert all(prof.Y[e.ident] == 0 and prof.Z[e.ident] == 0 for e in below)
        assert all(map(is_dyadic_unit, prof.Y.values()))
        assert sum(prof.Y.values()) == 1 and sum(prof.Z.values()) <= 1


class TestExactFiniteSupport:
    def test_constant(self):
        perf = exact_finite_support_performance([D.constant(1)])
        assert (perf.expected_alg, perf.expected_max_reals) == (F(1, 2), 1)

    @pytest.mark.parametrize("eps", [F(1, 2), F(1, 4), F(1, 10), F(1, 100)])
    def test_ksg(self, eps):
        perf = exact_finite_support_performance([D.constant(1), D.two_point(1 / eps, eps, 0)])
        assert perf.expected_alg == 1 - eps / 2
        assert perf.expected_max_reals == 2 - eps
        assert perf.ratio == F(1, 2)

    def test_ksg_quarter_by_hand(self):
        # four outcomes of (sample, real) for X2 in {0, 4}; X1 ties broken half-half
        eps = F(1, 4)
        by_hand = (1 - eps) ** 2 * F(1, 2) + eps * (1 - eps) * (F(1, 2) * 1 + F(1, 2) * 4) + eps**2 * F(1, 2) * 4
        perf = exact_finite_support_performance([D.constant(1), D.two_point(4, eps, 0)])
        assert perf.expected_alg == by_hand == F(7, 8)

    def test_scaled_gap_high_term(self):
        n = 4
        specs = [D.constant(1), D.two_point(2**n, F(1, n), 0)]
        perf = exact_finite_support_performance(specs, F(1, 2))
        # low max sample: threshold 1/2, X1 always clears; high sample and real: take 2^n
        assert perf.expected_alg == (1 - F(1, n)) * 1 + F(2**n, n**2)

    @pytest.mark.parametrize(
        "specs",
        [
            [D.constant(1)],
            [D.constant(1), D.two_point(4, F(1, 4), 0)],
            [D.two_point(3, F(1, 3), 1), D.two_point(2, F(1, 2), 1), D.constant(2)],
            [D.two_point(5, F(2, 5), 0), D.two_point(5, F(1, 5), 2)],
        ],
    )
    def test_game_equals_assignment_average(self, specs):
        direct = exact_finite_support_performance(specs)
        averaged = assignment_averaged_performance(specs)
        assert direct == averaged
        assert 2 * direct.expected_alg >= direct.expected_max_reals

    def test_indexed_order_dominates_worst_case(self):
        specs = [D.two_point(3, F(1, 3), 1), D.two_point(2, F(1, 2), 1), D.constant(2)]
        worst = exact_finite_support_performance(specs, 1, OrderPolicy.almighty())
        idx = exact_finite_support_performance(specs, 1, OrderPolicy.indexed())
        assert idx.expected_alg >= worst.expected_alg
        assert idx.expected_max_reals == worst.expected_max_reals

    def test_joint_tag_ordering_for_cross_value_tie(self):
        # threshold 1/2 * 2 = 1 meets a real of value 1: tag order is a fair coin
        perf = exact_finite_support_performance([D.constant(2), D.constant(1)], F(1, 2), OrderPolicy.indexed())
        # samples (2, 1), reals (2, 1); threshold value 1 with the tag of sample 0.
        # real 0 (value 2) clears it immediately under indexed order.
        assert perf.expected_alg == 2
        perf = exact_finite_support_performance([D.constant(2), D.constant(1)], F(1, 2), OrderPolicy.almighty())
        # smallest first: real 1 (value 1) wins iff its tag beats sample 0's tag
        assert perf.expected_alg == F(1, 2) * 1 + F(1, 2) * 2

    def test_cap(self):
        with pytest.raises(CapExceeded):
            exact_finite_support_performance([D.two_point(2, F(1, 2), 1)] * 3, cap=10)

    def test_rejects_continuous(self):
        with pytest.raises(D.SpecError):
            exact_finite_support_performance([D.uniform_interval(0, 1)])
