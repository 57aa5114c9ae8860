"""Chain laws, stepping, rescaled simulation, and the family builders.

Monte Carlo checks compare against closed-form conditional expectations
derived from the one-generation recursion (linearity of the increment sums).
"""

import math

import numpy as np
import pytest

from bgwsim.chain import (
    BernoulliDeath,
    BinomialSplit,
    ChainState,
    Constant,
    HeavyTailDN,
    IndependentPair,
    ParameterError,
    ScalingFamily,
    SexSplit,
    ShiftedPair,
    Tabulated,
    build_replacement_couples,
    build_survival_sexual,
    replacement_law_from_triplet,
    simulate_ensemble,
    simulate_rescaled,
    step,
)
from bgwsim.mating import min_mating
from bgwsim.measures import JumpMeasure


def constant_family(k_solo=0, pair=(0, 0), N=10, v_N=10.0):
    return ScalingFamily(
        N=N, v_N=v_N,
        female_solo=Constant(k_solo), male_solo=Constant(k_solo),
        pair=IndependentPair(Constant(pair[0]), Constant(pair[1])),
        mating=min_mating(),
    )


class TestStep:
    def test_all_zero_laws_fix_state(self):
        fam = constant_family()
        s = ChainState(5, 7)
        out = step(fam, s, master_seed=1)
        assert (out.F, out.M, out.generation) == (5, 7, 1)

    def test_everyone_dies(self):
        fam = ScalingFamily(
            N=10, v_N=10.0,
            female_solo=Constant(-1), male_solo=Constant(-1),
            pair=IndependentPair(Constant(0), Constant(0)),
            mating=min_mating(),
        )
        out = step(fam, ChainState(3, 2), master_seed=1)
        assert (out.F, out.M) == (0, 0)

    def test_survival_preset_with_no_events(self):
        fam = build_survival_sexual(alpha=0.0, mu=JumpMeasure.zero(), q=0.5,
                                    p_f=0.0, p_m=0.0, N=50, v_N=50.0)
        out = step(fam, ChainState(20, 30), master_seed=3)
        assert (out.F, out.M) == (20, 30)

    def test_conditional_mean_matches_recursion(self):
        # E[F'|F,M] = F + F E[solo] + (F^M) E[pair_f]
        fam = ScalingFamily(
            N=100, v_N=100.0,
            female_solo=BernoulliDeath(0.02), male_solo=BernoulliDeath(0.05),
            pair=IndependentPair(
                Tabulated(values=(-1, 0, 2), probs=(0.2, 0.5, 0.3)),
                Tabulated(values=(0, 1), probs=(0.6, 0.4))),
            mating=min_mating(),
        )
        F0, M0 = 400, 300
        n = 40_000
        vals, _ = simulate_ensemble(fam, (F0 / 100, M0 / 100), horizon_t=1 / 100.0,
                                    record_times=[1 / 100.0], n_paths=n, master_seed=7)
        f1 = vals[:, 0, 0] * 100
        m1 = vals[:, 0, 1] * 100
        ef = F0 + F0 * (-0.02) + min(F0, M0) * (0.2 * -1 + 0.3 * 2)
        em = M0 + M0 * (-0.05) + min(F0, M0) * 0.4
        assert np.mean(f1) == pytest.approx(ef, abs=4 * np.std(f1) / math.sqrt(n))
        assert np.mean(m1) == pytest.approx(em, abs=4 * np.std(m1) / math.sqrt(n))

    def test_never_negative_across_random_valid_families(self):
        rng = np.random.default_rng(42)
        for trial in range(30):
            n_scale = int(rng.integers(5, 50))
            fam = ScalingFamily(
                N=n_scale, v_N=float(n_scale),
                female_solo=BernoulliDeath(float(rng.uniform(0, 1))),
                male_solo=BernoulliDeath(float(rng.uniform(0, 1))),
                pair=ShiftedPair(IndependentPair(
                    Tabulated(values=(0, 1, 3), probs=(0.5, 0.3, 0.2)),
                    Tabulated(values=(0, 2), probs=(0.7, 0.3))), shift=(-1, -1)),
                mating=min_mating(),
            )
            state = ChainState(int(rng.integers(0, 100)), int(rng.integers(0, 100)))
            for _ in range(20):
                state = step(fam, state, master_seed=trial)
                assert state.F >= 0 and state.M >= 0

    def test_axis_absorption_death_only(self):
        fam = build_survival_sexual(alpha=1.0, mu=JumpMeasure.atom(1.0, 1.0),
                                    q=0.5, p_f=0.3, p_m=0.3, N=20, v_N=20.0)
        state = ChainState(0, 15)
        for _ in range(25):
            state = step(fam, state, master_seed=9)
            assert state.F == 0


class TestDeterminism:
    def test_single_path_matches_ensemble_bitwise(self):
        fam = build_survival_sexual(alpha=1.0, mu=JumpMeasure.atom(1.0, 1.0),
                                    q=0.5, p_f=0.2, p_m=0.2, N=64, v_N=64.0)
        times = [0.25, 0.5, 1.0]
        ens, _ = simulate_ensemble(fam, (1.0, 2.0), 1.0, times, n_paths=8, master_seed=11)
        for i in (0, 3, 7):
            solo = simulate_rescaled(fam, (1.0, 2.0), 1.0, times, master_seed=11,
                                     path_index=i)
            assert np.array_equal(solo.values, ens[i])

    def test_repeat_runs_identical(self):
        fam = build_survival_sexual(alpha=0.5, mu=JumpMeasure.atom(0.5, 2.0),
                                    q=0.4, p_f=0.1, p_m=0.3, N=32, v_N=32.0)
        a, _ = simulate_ensemble(fam, (1.0, 1.0), 0.5, [0.5], 16, master_seed=5)
        b, _ = simulate_ensemble(fam, (1.0, 1.0), 0.5, [0.5], 16, master_seed=5)
        assert np.array_equal(a, b)

    def test_initial_record_is_floor(self):
        fam = constant_family(N=7, v_N=7.0)
        path = simulate_rescaled(fam, (0.5, 0.9), 0.1, [0.0], master_seed=1)
        assert path.values[0, 0] == math.floor(7 * 0.5) / 7
        assert path.values[0, 1] == math.floor(7 * 0.9) / 7


class TestSexSplit:
    def test_split_sums_to_litter(self):
        # L_f + L_m = D draw by draw: the split and the bare litter law read
        # the same tape, so the sums must agree exactly
        from bgwsim.chain import _BlockTape
        from bgwsim.streams import context_key

        law = HeavyTailDN(alpha=5.0, mu=JumpMeasure.atom(1.0, 1.0), N=30, v_N=30.0)
        split = SexSplit(law, q=0.3)
        tape = _BlockTape(context_key(13, "split"), np.arange(5000).astype(np.uint64), 0)
        counts = np.full(5000, 25, dtype=np.int64)
        sf, sm = split.sums(counts, tape, 0)
        d = law.sum_of(counts, tape, 0, 2)
        assert np.all(sf >= 0) and np.all(sm >= 0)
        assert np.array_equal(sf + sm, d)

    def test_heavy_tail_atom_and_tail_frequencies(self):
        # P(D=1) = alpha/v_N and P(D >= N u) = mu[u,inf)/(N v_N)
        alpha, N, v_N = 1.0, 50, 50.0
        mu = JumpMeasure.atom(1.0, 1.0)
        law = HeavyTailDN(alpha=alpha, mu=mu, N=N, v_N=v_N)

        from bgwsim.chain import _BlockTape
        from bgwsim.streams import context_key
        n = 1_000_000
        tape = _BlockTape(context_key(17, "dtest"), np.arange(n).astype(np.uint64), 0)
        draws = law.draws(n, tape, 0, 0)
        p1_emp = np.mean(draws == 1)
        se1 = math.sqrt((alpha / v_N) * (1 - alpha / v_N) / n)
        assert p1_emp == pytest.approx(alpha / v_N, abs=4 * se1)
        # tail at u = 0.5: mu[0.5,inf)/(N v_N) = 1/2500
        p_tail = np.mean(draws >= N * 0.5)
        target = 1.0 / (N * v_N)
        se_t = math.sqrt(target * (1 - target) / n)
        assert p_tail == pytest.approx(target, abs=4 * se_t)
        # all tail draws equal N here (single atom at 1)
        assert set(np.unique(draws)).issubset({0, 1, N})

    def test_heavy_tail_zero_law(self):
        law = HeavyTailDN(alpha=0.0, mu=JumpMeasure.zero(), N=10, v_N=10.0)
        from bgwsim.chain import _BlockTape
        from bgwsim.streams import context_key
        tape = _BlockTape(context_key(1, "z"), np.arange(100).astype(np.uint64), 0)
        assert np.all(law.draws(100, tape, 0, 0) == 0)

    def test_heavy_tail_mean_closed_form(self):
        law = HeavyTailDN(alpha=2.0, mu=JumpMeasure.atom(1.0, 1.0), N=8, v_N=16.0)
        # E[D] = alpha/v_N + T(2/N)/(N v_N) + sum_{k=2..8} ... = alpha/v_N + 8/(N v_N)
        assert law.mean() == pytest.approx(2.0 / 16.0 + 8.0 / (8 * 16.0))


class TestBuilders:
    def test_survival_parameter_validation(self):
        with pytest.raises(ParameterError):
            build_survival_sexual(alpha=100.0, mu=JumpMeasure.zero(), q=0.5,
                                  p_f=0.1, p_m=0.1, N=10, v_N=10.0)
        with pytest.raises(ParameterError):
            build_survival_sexual(alpha=0.1, mu=JumpMeasure.zero(), q=0.5,
                                  p_f=20.0, p_m=0.1, N=10, v_N=10.0)

    def test_replacement_constant_death(self):
        fam = build_replacement_couples(Constant(-1), Constant(-1), N=10, v_N=10.0)
        out = step(fam, ChainState(4, 4), master_seed=2)
        assert (out.F, out.M) == (0, 0)

    def test_replacement_mean_increment(self):
        f_law = Tabulated(values=(-1, 0, 1), probs=(0.3, 0.4, 0.3))
        fam = build_replacement_couples(f_law, f_law, N=100, v_N=100.0)
        n = 30_000
        vals, _ = simulate_ensemble(fam, (2.0, 1.0), 1 / 100.0, [1 / 100.0],
                                    n_paths=n, master_seed=23)
        f1 = vals[:, 0, 0] * 100
        # E[F'] = F + (F^M) * mean = 200 + 100 * 0.0
        assert np.mean(f1) == pytest.approx(200.0, abs=4 * np.std(f1) / math.sqrt(n))

    def test_triplet_law_moments(self):
        # truncated first moment: v_N N E[h(L/N)] = alpha exactly by design
        N, v_N, alpha = 40, 40.0, -0.3
        nu = JumpMeasure.atom(0.5, 1.0)
        law = replacement_law_from_triplet(alpha, nu, N, v_N)
        vals = np.asarray(law.values, float)
        probs = np.asarray(law.probs, float)
        h_of = np.clip(vals / N, -1, 1)
        assert v_N * N * float(np.dot(h_of, probs)) == pytest.approx(alpha, abs=1e-10)
        assert abs(probs.sum() - 1.0) < 1e-12
        assert law.min_value >= -1

    def test_triplet_requires_atomic(self):
        with pytest.raises(ParameterError):
            replacement_law_from_triplet(0.0, JumpMeasure.power_density(-2.0), 10, 10.0)


class TestExplosion:
    def test_overflow_flags_path(self):
        fam = ScalingFamily(
            N=4, v_N=1.0,
            female_solo=Constant(3), male_solo=Constant(3),
            pair=IndependentPair(Constant(0), Constant(0)),
            mating=min_mating(),
        )
        # F doubles every generation: 4 * 4^g exceeds 2^62 after ~30 gens
        vals, exploded = simulate_ensemble(fam, (1.0, 1.0), 40.0, [40.0],
                                           n_paths=2, master_seed=1)
        assert np.all(exploded)
        assert np.all(np.isnan(vals[:, 0, 0]))


class TestBinomialSplitLaw:
    def test_mean(self):
        law = BinomialSplit(Tabulated(values=(0, 4), probs=(0.5, 0.5)), q=0.25)
        assert law.mean() == pytest.approx(0.5)
        assert law.n_blocks == 3
