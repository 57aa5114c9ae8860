"""Mating function evaluation and hypothesis checkers."""

import numpy as np
import pytest

from bgwsim.mating import (
    DomainError,
    check_B1,
    check_B2_B3_B4,
    eval_limit,
    from_expression,
    min_mating,
)
from bgwsim.measures import Status


class TestEvalLimit:
    def test_min_point(self):
        assert eval_limit(min_mating(), 2.0, 3.0) == 2.0

    def test_axis_zero(self):
        assert eval_limit(min_mating(), 0.0, 5.0) == 0.0
        assert eval_limit(min_mating(), 5.0, 0.0) == 0.0

    def test_diagonal(self):
        assert eval_limit(min_mating(), 4.0, 4.0) == 4.0

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            eval_limit(min_mating(), -1.0, 2.0)

    def test_symmetry_property(self):
        g = min_mating()
        rng = np.random.default_rng(5)
        for _ in range(30):
            y, z = rng.uniform(0, 20, 2)
            assert eval_limit(g, y, z) == eval_limit(g, z, y)


class TestCheckB1:
    def test_exact_identity(self):
        v = check_B1(min_mating(), [4, 8, 16], grid_bound=6.0)
        assert v.status is Status.SATISFIED
        assert max(v.witness["sups"]) == 0.0

    def test_shifted_prelimit(self):
        g = min_mating()
        shifted = type(g)(name="min+1", limit=g.limit,
                          prelimit=lambda N, j, k: np.minimum(j, k) + 1,
                          a_dom=1.0, b_dom=1.0)
        v = check_B1(shifted, [4, 8, 16, 32], grid_bound=6.0)
        # hand computation: the lattice sup is exactly 1/N
        assert v.witness["sups"] == pytest.approx([0.25, 0.125, 0.0625, 0.03125])
        assert v.status is Status.SATISFIED

    def test_wrong_limit_flagged(self):
        g = min_mating()
        wrong = type(g)(name="j-only", limit=g.limit,
                        prelimit=lambda N, j, k: np.asarray(j),
                        a_dom=1.0, b_dom=0.0)
        # brute force: sup at (grid_bound, 0) equals grid_bound, constant in N
        v = check_B1(wrong, [4, 8, 16], grid_bound=4.0)
        assert v.status is Status.VIOLATED
        assert v.witness["sups"] == pytest.approx([4.0, 4.0, 4.0])

    def test_requires_increasing_ladder(self):
        with pytest.raises(ValueError):
            check_B1(min_mating(), [8, 4])


class TestCheckB2B3B4:
    def test_min_mating_record(self):
        rec = check_B2_B3_B4(min_mating(), delta=0.1, n=10.0, grid_step=0.05)
        assert rec["B2"].status is Status.SATISFIED
        assert rec["B3"].status is Status.SATISFIED
        assert rec["B4"].status is Status.SATISFIED
        assert rec["B4"].witness["inf"] == pytest.approx(0.1)
        assert rec["lipschitz_estimate"] == pytest.approx(1.0, abs=1e-9)

    def test_saturating_product_dominated(self):
        # yz/(1+y+z) <= y^z, checked by brute-force grid scan
        g = from_expression("y*z/(1+y+z)", a_dom=1.0, b_dom=0.0)
        rec = check_B2_B3_B4(g, delta=0.5, n=8.0, grid_step=0.125)
        assert rec["B2"].status is Status.SATISFIED
        assert rec["B3"].status is Status.SATISFIED
        assert rec["B4"].status is Status.SATISFIED

    def test_violating_function_caught(self):
        g = from_expression("y+z", a_dom=1.0, b_dom=0.0)
        rec = check_B2_B3_B4(g, delta=0.5, n=4.0, grid_step=0.25)
        assert rec["B2"].status is Status.VIOLATED
        assert rec["B3"].status is Status.VIOLATED  # nonzero on the axes

    def test_b4_inf_monotone_in_delta(self):
        g = min_mating()
        infs = [check_B2_B3_B4(g, delta=d, n=5.0, grid_step=0.25)["B4"].witness["inf"]
                for d in (2.0, 1.0, 0.5, 0.25)]
        assert all(a >= b for a, b in zip(infs, infs[1:]))

    def test_expression_prelimit_floors(self):
        g = from_expression("min(y,z)/2")
        vals = g.prelimit(4, np.array([3]), np.array([5]))
        assert vals[0] == 1  # floor(1.5)
