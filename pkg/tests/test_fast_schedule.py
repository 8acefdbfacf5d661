import numpy as np
import pytest

from fastdiff import (ConstructionError, FastSchedule, VarianceSchedule,
                      NoiseLevelMap, build_step_schedule, build_var_schedule,
                      step_as_var_equivalence, step_subset)

ALL_BUILDS = [("step", "linear"), ("step", "quadratic"),
              ("var", "linear"), ("var", "quadratic")]


def build(kind, schedule, level_map, num_steps, variant):
    builder = build_step_schedule if kind == "step" else build_var_schedule
    return builder(schedule, level_map, num_steps, variant)


class TestStepSubsets:
    def test_linear_exact_division(self, sched_1000, map_1000):
        fast = build_step_schedule(sched_1000, map_1000, 10, "linear")
        assert fast.taus.tolist() == [100, 200, 300, 400, 500,
                                      600, 700, 800, 900, 1000]

    def test_quadratic_hand_values(self, sched_1000, map_1000):
        # floor(0.8 * (1000 / 100) * s^2) for s = 1..10
        fast = build_step_schedule(sched_1000, map_1000, 10, "quadratic")
        assert fast.taus.tolist() == [8, 32, 72, 128, 200,
                                      288, 392, 512, 648, 800]

    def test_identity_subset_recovers_original(self, sched_200, map_200):
        fast = build_step_schedule(sched_200, map_200, 200, "linear")
        assert fast.taus.tolist() == list(range(1, 201))
        np.testing.assert_allclose(fast.etas, sched_200.betas,
                                   rtol=0.0, atol=1e-15)

    def test_integer_steps_map_to_themselves(self, sched_200, map_200):
        fast = build_step_schedule(sched_200, map_200, 10, "quadratic")
        assert np.array_equal(fast.cont_steps, fast.taus.astype(float))
        # and the bijection agrees with that convention
        inverted = [map_200.step_of_noise_level(r) for r in fast.noise_levels]
        np.testing.assert_allclose(inverted, fast.taus, atol=1e-5)

    def test_collision_dedup_warns_and_shrinks(self, map_200, sched_200):
        with pytest.warns(UserWarning, match="collapsed"):
            fast = build_step_schedule(sched_200, map_200, 150, "quadratic")
        assert fast.num_steps < 150
        assert np.all(np.diff(fast.taus) > 0)
        assert fast.taus[0] >= 1

    @pytest.mark.parametrize("bad", [0, -1, 201])
    def test_rejects_bad_length(self, sched_200, map_200, bad):
        with pytest.raises(ValueError):
            build_step_schedule(sched_200, map_200, bad, "linear")

    def test_step_subset_unknown_variant(self):
        with pytest.raises(ConstructionError):
            step_subset(100, 10, "cubic")


class TestVarSchedules:
    def test_single_step_closed_form(self, sched_200, map_200):
        fast = build_var_schedule(sched_200, map_200, 1, "linear")
        eta_target = 1.0 - sched_200.alpha_bars[-1]
        assert fast.etas[0] == pytest.approx(eta_target, rel=1e-10)
        # slope recovered from eta_1 = (1 + c) eta_0
        c = fast.etas[0] / sched_200.beta_start - 1.0
        assert c > 0

    @pytest.mark.parametrize("variant", ["linear", "quadratic"])
    def test_constraint_residual(self, sched_1000, map_1000, variant):
        fast = build_var_schedule(sched_1000, map_1000, 10, variant)
        product = np.prod(1.0 - fast.etas)
        target = sched_1000.alpha_bars[-1]
        assert abs(product - target) / target <= 1e-10

    @pytest.mark.parametrize("num_steps", [1, 3, 20])
    def test_terminal_noise_level(self, sched_200, map_200, num_steps):
        fast = build_var_schedule(sched_200, map_200, num_steps, "linear")
        want = np.sqrt(sched_200.alpha_bars[-1])
        assert fast.noise_levels[-1] == pytest.approx(want, rel=1e-10)

    def test_no_admissible_slope(self):
        # eta_0 = beta_1 = 0.05 forces prod(1 - eta) below alpha_bar(T) at
        # c = 0 once S is large enough
        schedule = VarianceSchedule(0.05, 0.1, 20)
        level_map = NoiseLevelMap(schedule)
        with pytest.raises(ConstructionError):
            build_var_schedule(schedule, level_map, 200, "linear")

    def test_deterministic_bitwise(self, sched_200, map_200):
        a = build_var_schedule(sched_200, map_200, 7, "quadratic")
        b = build_var_schedule(sched_200, map_200, 7, "quadratic")
        assert np.array_equal(a.etas, b.etas)
        assert np.array_equal(a.cont_steps, b.cont_steps)


class TestInvariants:
    @pytest.mark.filterwarnings("ignore:step subset collapsed")
    @pytest.mark.parametrize("kind,variant", ALL_BUILDS)
    @pytest.mark.parametrize("num_steps", [2, 5, 10, 50])
    def test_shape_invariants(self, sched_200, map_200, kind, variant,
                              num_steps):
        fast = build(kind, sched_200, map_200, num_steps, variant)
        assert np.all((fast.etas > 0) & (fast.etas < 1))
        assert np.all(fast.eta_tildes <= fast.etas + 1e-15)
        levels = np.concatenate([[1.0], fast.noise_levels])
        assert np.all(np.diff(levels) < 0)
        assert fast.noise_levels[-1] > 0
        assert np.all(np.diff(fast.cont_steps) > 0)
        assert np.all((fast.cont_steps > 0)
                      & (fast.cont_steps <= sched_200.num_steps))
        # noise levels square exactly to the cumulative products
        assert np.array_equal(fast.noise_levels**2,
                              np.square(np.sqrt(fast.gamma_bars)))

    @pytest.mark.parametrize("kind,variant", ALL_BUILDS)
    def test_terminal_constraint(self, sched_200, map_200, kind, variant):
        fast = build(kind, sched_200, map_200, 10, variant)
        if kind == "step":
            want = sched_200.alpha_bars[fast.taus[-1] - 1]
        else:
            want = sched_200.alpha_bars[-1]
        assert abs(fast.gamma_bars[-1] - want) / want <= 1e-10


class TestStepAsVar:
    @pytest.mark.filterwarnings("ignore:step subset collapsed")
    @pytest.mark.parametrize("num_steps,variant,fixture", [
        (10, "linear", "sched_1000"),
        (20, "quadratic", "sched_200"),
    ])
    def test_identity_holds(self, request, num_steps, variant, fixture):
        schedule = request.getfixturevalue(fixture)
        level_map = NoiseLevelMap(schedule)
        fast = build_step_schedule(schedule, level_map, num_steps, variant)
        assert step_as_var_equivalence(fast, schedule)

    def test_perturbation_breaks_identity(self, sched_1000, map_1000):
        fast = build_step_schedule(sched_1000, map_1000, 10, "linear")
        etas = fast.etas.copy()
        etas[3] *= 1.0 + 1e-6
        broken = FastSchedule(fast.kind, etas, fast.cont_steps, fast.taus)
        assert not step_as_var_equivalence(broken, sched_1000)

    def test_rejects_var_kind(self, sched_200, map_200):
        fast = build_var_schedule(sched_200, map_200, 5, "linear")
        with pytest.raises(ValueError):
            step_as_var_equivalence(fast, sched_200)


class TestSerialization:
    @pytest.mark.parametrize("kind,variant", ALL_BUILDS)
    def test_dict_roundtrip_bitwise(self, sched_200, map_200, kind, variant):
        fast = build(kind, sched_200, map_200, 8, variant)
        again = FastSchedule.from_dict(fast.to_dict())
        assert again.kind == fast.kind
        assert np.array_equal(again.etas, fast.etas)
        assert np.array_equal(again.noise_levels, fast.noise_levels)
        assert np.array_equal(again.cont_steps, fast.cont_steps)

    def test_json_file(self, sched_200, map_200, tmp_path):
        fast = build_step_schedule(sched_200, map_200, 5, "linear")
        path = tmp_path / "fast.json"
        fast.to_json(path)
        import json
        data = json.loads(path.read_text())
        assert set(data) == {"kind", "S", "eta", "r", "t_cont", "tau"}
        assert data["S"] == 5

    def test_rejects_bad_etas(self):
        with pytest.raises(ConstructionError):
            FastSchedule("step_linear", np.array([0.1, 1.5]),
                         np.array([1.0, 2.0]))
        with pytest.raises(ConstructionError):
            FastSchedule("bogus", np.array([0.1]), np.array([1.0]))
