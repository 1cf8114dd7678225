"""Frame-stepped simulator, sweep harness, and MCU power model."""

import csv
import io
import math
from dataclasses import replace

import numpy as np
import pytest

from compactmdp import (
    MCU_DENSE_VI,
    MCU_QL,
    MCU_SVI,
    NodeConfig,
    NodeState,
    PowerModel,
    QLearningController,
    Scenario,
    ScheduleChange,
    StructuredController,
    ThresholdController,
    average_power,
    crossover_period,
    make_controller,
    pareto_sweep,
    simulate,
    sweep_series,
    write_sweep_csv,
)
from compactmdp.sim import (
    DEFAULT_EPSILON_DECAY,
    NQ_SWEEP,
    R2_SWEEP,
    SERIES_LABELS,
    SWEEP_CSV_COLUMNS,
)
from support import AlwaysOnController

QUIET = NodeConfig(app_packet_prob=(0.0, 0.0))


def run(controller, frames=1000, seed=0, node=None, schedule=()):
    scenario = Scenario(
        node=node or NodeConfig(), duration_frames=frames, seed=seed,
        schedule=schedule,
    )
    return simulate(scenario, controller)


class TestSimulateBasics:
    def test_no_traffic_no_activity(self):
        m = run(ThresholdController(1), node=QUIET)
        assert m.packets_generated == 0
        assert m.packets_transmitted == 0
        assert m.packets_dropped == 0
        assert m.packets_queued_at_end == 0
        assert m.transactions == 0
        assert m.transaction_energy == 0.0
        assert m.modem_current_energy == 0.0
        assert m.reward_total == 0.0
        assert math.isnan(m.avg_latency)
        assert math.isnan(m.energy_per_packet)

    def test_idle_connection_costs_the_intercept(self):
        # One transaction with zero packets: the affine model's intercept.
        m = run(AlwaysOnController(), frames=100, node=QUIET)
        assert m.transactions == 1
        assert abs(m.transaction_energy - 5.07) < 1e-12

    def test_idle_connection_current_accounting(self):
        # 20 frames attaching at 120 mA, 80 connected at 162.5 mA, 4 V rail.
        m = run(AlwaysOnController(), frames=100, node=QUIET)
        assert abs(m.reward_total - (-154.0)) < 1e-9
        assert abs(m.modem_current_energy - 6.16) < 1e-9

    def test_rejects_empty_run(self):
        with pytest.raises(ValueError):
            simulate(Scenario(duration_frames=0), ThresholdController(1))

    def test_always_on_latency_is_bounded_by_the_attach(self):
        m = run(AlwaysOnController(), frames=20000)
        assert m.packets_transmitted > 0
        assert m.avg_latency <= 2.0 + 0.1

    def test_threshold_extremes_trade_latency_for_energy(self):
        for seed in (0, 1):
            eager = run(ThresholdController(1), frames=50000, seed=seed)
            lazy = run(ThresholdController(10), frames=50000, seed=seed)
            assert eager.avg_latency < lazy.avg_latency
            assert eager.energy_per_packet > lazy.energy_per_packet


class TestConservationAndDeterminism:
    def controllers(self):
        yield ThresholdController(1)
        yield ThresholdController(5)
        yield AlwaysOnController()
        yield StructuredController(NodeConfig(), solve_period=100.0)
        yield QLearningController(NodeConfig(), seed=9)

    def test_packet_conservation_exact(self):
        for seed, controller in enumerate(self.controllers()):
            m = run(controller, frames=5000, seed=seed)
            assert (
                m.packets_generated
                == m.packets_transmitted + m.packets_dropped + m.packets_queued_at_end
            )

    def test_transaction_energy_identity(self):
        for controller in self.controllers():
            m = run(controller, frames=5000, seed=2)
            expected = 5.07 * m.transactions + 1.55 * m.packets_transmitted
            assert m.transaction_energy == pytest.approx(expected, rel=1e-9)

    def test_bitwise_determinism(self):
        def make():
            return QLearningController(NodeConfig(), seed=4, epsilon_decay=0.999)

        first = run(make(), frames=8000, seed=7)
        second = run(make(), frames=8000, seed=7)
        assert first == second

    def test_arrivals_are_controller_independent(self):
        counts = {
            run(controller, frames=5000, seed=3).packets_generated
            for controller in self.controllers()
        }
        assert len(counts) == 1

    def test_solver_counters_surface_in_metrics(self):
        controller = StructuredController(NodeConfig(), solve_period=100.0)
        m = run(controller, frames=3000, seed=0)
        assert m.solver_invocations == 3
        assert m.solver_kernel_ops == controller.total_kernel_ops
        assert m.solver_kernel_ops > 0
        assert run(ThresholdController(1), frames=100).solver_invocations == 0


class TestSchedule:
    def test_parameter_step_changes_the_run(self):
        busier = ScheduleChange(50.0, "app_packet_prob", (0.5, 1.0))
        base = run(ThresholdController(3), frames=2000)
        stepped = run(ThresholdController(3), frames=2000, schedule=(busier,))
        assert stepped.packets_generated > base.packets_generated

    def test_step_beyond_the_run_is_inert(self):
        late = ScheduleChange(1e9, "app_packet_prob", (0.5, 1.0))
        base = run(ThresholdController(3), frames=2000)
        same = run(ThresholdController(3), frames=2000, schedule=(late,))
        assert base == same

    def test_connect_time_step_slows_later_attaches(self):
        slow = ScheduleChange(100.0, "connect_time", 4.0)
        base = run(ThresholdController(1), frames=20000)
        stepped = run(ThresholdController(1), frames=20000, schedule=(slow,))
        assert stepped.avg_latency > base.avg_latency

    def test_rejects_unknown_parameter(self):
        with pytest.raises(ValueError):
            ScheduleChange(10.0, "frame_period", 0.2)


class TestMakeController:
    def test_threshold_series(self):
        controller, config = make_controller("on-off", NodeConfig(), 4)
        assert isinstance(controller, ThresholdController)
        assert controller.queue_threshold == 4
        assert config == NodeConfig()

    def test_learning_series_replace_the_packet_reward(self):
        for series, cls in (("mdp", StructuredController), ("ql", QLearningController)):
            controller, tuned = make_controller(series, NodeConfig(), 7.0, seed=0)
            assert isinstance(controller, cls)
            assert tuned.reward_weights == (-10.0, 7.0, -100.0)

    def test_ql_controllers_with_equal_seed_explore_identically(self):
        state = NodeState(0, 0, 0)
        a, _ = make_controller("ql", NodeConfig(), 5.0, seed=0)
        b, _ = make_controller("ql", NodeConfig(), 5.0, seed=0)
        assert [a.act(state) for _ in range(20)] == [b.act(state) for _ in range(20)]

    def test_unknown_series(self):
        with pytest.raises(ValueError):
            make_controller("sarsa", NodeConfig(), 1.0)


@pytest.fixture(scope="module")
def tiny_points():
    scenario = Scenario(duration_frames=1500)
    return pareto_sweep(scenario, seeds=(0, 1), solve_period=3600.0)


class TestSweep:
    def test_full_grid_shape(self, tiny_points):
        assert len(tiny_points) == len(R2_SWEEP) * 2 + len(NQ_SWEEP)
        assert [p.series for p in tiny_points[:10]] == ["on-off"] * 10
        labels = {p.series for p in tiny_points}
        assert labels == set(SERIES_LABELS)

    def test_parameter_names_follow_series(self, tiny_points):
        for p in tiny_points:
            expected = "queue_threshold" if p.series == "on-off" else "tx_reward"
            assert p.parameter == expected
            assert p.seeds == 2

    def test_single_value_sweep(self):
        points = sweep_series(
            Scenario(duration_frames=500), "on-off", [2], seeds=(0,)
        )
        assert len(points) == 1
        assert points[0].value == 2.0

    def test_csv_round_trip(self, tiny_points):
        buffer = io.StringIO()
        write_sweep_csv(tiny_points, buffer)
        rows = list(csv.reader(io.StringIO(buffer.getvalue())))
        assert rows[0] == list(SWEEP_CSV_COLUMNS)
        assert len(rows) == len(tiny_points) + 1
        for row, point in zip(rows[1:], tiny_points):
            assert row[0] == point.series
            assert float(row[2]) == point.value
            assert float(row[4]) == pytest.approx(point.avg_latency, rel=1e-5)
            assert float(row[5]) == pytest.approx(point.energy_per_packet, rel=1e-5)

    def test_sweep_default_decay_is_applied(self):
        controller, _ = make_controller("ql", NodeConfig(), 5.0, seed=0)
        assert controller.epsilon_decay == DEFAULT_EPSILON_DECAY


class TestPowerModel:
    def test_frame_only_model_reference_value(self):
        # 7.06 uJ per frame at 10 Hz plus the 8.2 uW sleep floor.
        assert average_power(MCU_QL) == pytest.approx(78.8e-6, rel=1e-12)

    def test_solver_model_at_one_hour(self):
        power = average_power(MCU_SVI, update_period=3600.0)
        assert power == pytest.approx(6.131444444444445e-05, rel=1e-12)

    def test_dense_solver_is_heavier_at_the_same_period(self):
        assert average_power(MCU_DENSE_VI, 3600.0) > average_power(MCU_SVI, 3600.0)

    def test_power_strictly_decreasing_in_update_period(self):
        periods = [60.0, 300.0, 3600.0, 86400.0]
        values = [average_power(MCU_SVI, t) for t in periods]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_frame_only_model_ignores_update_period(self):
        assert average_power(MCU_QL, 60.0) == average_power(MCU_QL, None)

    def test_crossover_reference_value(self):
        t = crossover_period(MCU_SVI, MCU_QL)
        assert t == pytest.approx(2693.3602190987, rel=1e-9)

    def test_crossover_equalizes_power(self):
        t = crossover_period(MCU_SVI, MCU_QL)
        assert average_power(MCU_SVI, t) == pytest.approx(
            average_power(MCU_QL, t), rel=1e-12
        )
        t2 = crossover_period(MCU_QL, MCU_SVI)
        assert t2 == pytest.approx(t, rel=1e-12)

    def test_no_crossover_when_solver_costs_match(self):
        assert crossover_period(MCU_QL, MCU_QL) is None
        assert crossover_period(MCU_SVI, MCU_DENSE_VI) is None

    def test_no_crossover_when_one_side_wins_everywhere(self):
        heavy = PowerModel(solver_cost=1.0, frame_cost=2e-6)
        light = PowerModel(solver_cost=0.5, frame_cost=1e-6)
        assert crossover_period(heavy, light) is None

    def test_update_period_required_with_solver_cost(self):
        with pytest.raises(ValueError):
            average_power(MCU_SVI, update_period=None)
        with pytest.raises(ValueError):
            average_power(MCU_SVI, update_period=0.0)

    def test_rejects_bad_frame_period(self):
        with pytest.raises(ValueError):
            average_power(MCU_QL, frame_period=0.0)
