"""Scheduling layer: window construction, rolling runs, study metrics."""

import numpy as np
import pytest

from frequc.milp import SolveOptions
from frequc.scheduler import (
    SchedulerError,
    Trajectory,
    UcOptions,
    UnitState,
    _advance_state,
    build_uc,
    cost_of_frequency_services,
    default_initial_state,
    emissions,
    extract_solution,
    load_factor,
    realized_series,
    slice_tree,
    solve_rolling_horizon,
    solve_uc,
    verify_solution,
    verify_trajectory,
)
from frequc.sysmodel import (
    FrequencyParams,
    GeneratorSpec,
    ScenarioBranch,
    ScenarioTree,
    SystemSpec,
    default_segment_grid,
)

DEMAND = (900.0, 1000.0, 1100.0, 1150.0, 1050.0, 950.0)
CAPACITY_FACTOR = (0.4, 0.6, 0.8, 0.5, 0.3, 0.7)


def toy_fleet():
    return (
        GeneratorSpec(id="base", technology="thermal", p_max=500.0, p_min=150.0,
                      inertia_const=6.0, marginal_cost=10.0, no_load_cost=400.0,
                      startup_cost=2000.0, min_up=1, min_down=1, pfr_max=0.0,
                      emissions_rate=0.2, deloadable=True, max_deload_fraction=0.4),
        GeneratorSpec(id="mid", technology="thermal", p_max=450.0, p_min=100.0,
                      inertia_const=28.0, marginal_cost=35.0, no_load_cost=250.0,
                      startup_cost=900.0, min_up=2, min_down=2, pfr_max=300.0,
                      emissions_rate=0.4),
        GeneratorSpec(id="flex", technology="thermal", p_max=400.0, p_min=80.0,
                      inertia_const=24.0, marginal_cost=55.0, no_load_cost=150.0,
                      startup_cost=400.0, min_up=1, min_down=1, pfr_max=280.0,
                      emissions_rate=0.5),
        GeneratorSpec(id="peak", technology="thermal", p_max=350.0, p_min=50.0,
                      inertia_const=14.0, marginal_cost=95.0, no_load_cost=80.0,
                      startup_cost=200.0, min_up=1, min_down=1, pfr_max=250.0,
                      emissions_rate=0.7),
    )


def toy_system(df_max=1.2, n_periods=6):
    fleet = toy_fleet()
    return SystemSpec(
        generators=fleet,
        demand_profile=DEMAND[:n_periods],
        wind_capacity=250.0,
        period_hours=1.0,
        frequency=FrequencyParams(
            f0=50.0, df_max=df_max, df_ss_max=df_max, rocof_max=1.0,
            t_d=4.0, damping=0.01,
            nadir_segments=default_segment_grid(500.0, 0.4),
            largest_unit_rating=500.0, largest_unit_inertia=6.0,
        ),
    )


def toy_tree(system, factors=(0.8, 0.5, 0.2), levels=(0.25, 0.5, 0.75)):
    branches = []
    for kappa in factors:
        net = tuple(
            d - system.wind_capacity * kappa * CAPACITY_FACTOR[t]
            for t, d in enumerate(system.demand_profile)
        )
        branches.append(ScenarioBranch(net_demand=net, probability=1.0 / len(factors)))
    return ScenarioTree(root=branches[1].net_demand[0], branches=tuple(branches),
                        quantile_levels=levels)


def options(**kw):
    base = dict(frequency_constraints=True, deloading_enabled=True,
                horizon=6, first_stage=6, largest_loss_mode="fixed")
    base.update(kw)
    return UcOptions(**base)


def test_options_validation():
    with pytest.raises(SchedulerError):
        UcOptions(horizon=0)
    with pytest.raises(SchedulerError):
        UcOptions(horizon=4, first_stage=5)
    with pytest.raises(SchedulerError):
        UcOptions(largest_loss_mode="adaptive")


def test_build_creates_expected_structure():
    system = toy_system()
    tree = toy_tree(system)
    model = build_uc(system, tree, options())
    for gid in ("base", "mid", "flex", "peak"):
        assert model.has_variable(f"x[{gid}][0]")
        assert model.has_variable(f"su[{gid}][5]")
        assert model.has_variable(f"p[{gid}][3][2]")
    assert model.has_variable("ploss[0][0]")
    assert model.has_variable("pnadir[5][2]")
    labels = {row.label for row in model.rows}
    assert "balance[0][0]" in labels
    assert "rocof[5][2]" in labels
    assert "qss[2][1]" in labels
    assert "h_min[4]" in labels
    assert "fix_largest[0][0]" in labels
    # the largest plant is committed in every period
    for t in range(6):
        var = model.variable_by_name(f"x[base][{t}]")
        assert var.lb == var.ub == 1.0


def test_frequency_off_omits_security_machinery():
    system = toy_system()
    tree = toy_tree(system)
    model = build_uc(system, tree, options(frequency_constraints=False))
    assert not model.has_variable("ploss[0][0]")
    assert not model.has_variable("mseg[0][0][0]")
    for row in model.rows:
        assert not row.label.startswith(("rocof", "qss", "nadir", "loss_bound"))


def test_window_screens_reject_bad_data():
    system = toy_system()
    # net demand above the dispatchable fleet
    sick = ScenarioTree(
        root=1800.0,
        branches=(ScenarioBranch((1800.0,) * 6, 1.0),),
        quantile_levels=(0.5,),
    )
    with pytest.raises(SchedulerError, match="exceeds dispatchable capacity"):
        build_uc(system, sick, options())
    # net demand above demand means negative wind availability
    inflated = ScenarioTree(
        root=1200.0,
        branches=(ScenarioBranch((1200.0, 1100.0, 1150.0, 1200.0, 1100.0, 1000.0), 1.0),),
        quantile_levels=(0.5,),
    )
    with pytest.raises(SchedulerError, match="negative wind"):
        build_uc(system, inflated, options())


def test_deload_floor_needs_room_under_demand():
    fleet = toy_fleet()
    system = SystemSpec(
        generators=fleet, demand_profile=(450.0, 900.0), wind_capacity=0.0,
        period_hours=1.0,
        frequency=toy_system(n_periods=2).frequency,
    )
    tree = ScenarioTree(root=450.0,
                        branches=(ScenarioBranch((450.0, 900.0), 1.0),),
                        quantile_levels=(0.5,))
    with pytest.raises(SchedulerError, match="largest plant minimum"):
        build_uc(system, tree, options(horizon=2, first_stage=2))


def test_initial_state_carry_and_conflicts():
    system = toy_system()
    tree = toy_tree(system)
    state = default_initial_state(system)
    state["mid"] = UnitState(on=True, hours=1)
    model = build_uc(system, tree, options(), initial_state=state)
    var = model.variable_by_name("x[mid][0]")
    assert var.lb == var.ub == 1.0
    assert model.variable_by_name("x[mid][1]").lb == 0.0

    # pinning the largest plant off contradicts the must-run requirement
    pins = {g.id: [1] * 6 for g in system.generators}
    pins["base"] = [0] * 6
    with pytest.raises(SchedulerError, match="conflict"):
        build_uc(system, tree, options(), fixed_commitments=pins)


def test_solved_window_respects_balance_and_limits():
    system = toy_system()
    tree = toy_tree(system)
    opts = options(horizon=3, first_stage=3)
    solution, model, raw = solve_uc(system, tree, opts)
    assert raw.status == "optimal"
    for t in range(3):
        for s in range(3):
            served = sum(solution.output[g.id][t, s] for g in system.generators)
            served += solution.wind_used[t, s]
            assert served == pytest.approx(system.demand_profile[t], abs=1e-6)
            assert solution.curtailment[t, s] >= -1e-9
            for g in system.generators:
                x = solution.commit[g.id][t]
                pv = solution.output[g.id][t, s]
                rv = solution.pfr[g.id][t, s]
                assert pv >= g.p_min * x - 1e-6
                assert pv + rv <= g.p_max * x + 1e-6
                assert rv <= g.pfr_max * x + 1e-6


def test_loss_variable_covers_every_unit_output():
    system = toy_system()
    tree = toy_tree(system)
    solution, _, _ = solve_uc(system, tree, options(horizon=3, first_stage=3))
    for t in range(3):
        for s in range(3):
            biggest = max(solution.output[g.id][t, s] for g in system.generators)
            assert solution.loss[t, s] >= biggest - 1e-6
            assert solution.loss_nadir[t, s] >= solution.loss[t, s] - 1e-6
            assert solution.segments[t, s].sum() == pytest.approx(1.0, abs=1e-6)


def test_fixed_mode_pins_largest_at_rating():
    system = toy_system()
    tree = toy_tree(system)
    solution, _, _ = solve_uc(system, tree,
                              options(horizon=3, first_stage=3,
                                      largest_loss_mode="fixed"))
    assert np.allclose(solution.output["base"], 500.0, atol=1e-6)


def test_optimised_mode_deloads_only_within_the_band():
    system = toy_system()
    tree = toy_tree(system)
    solution, _, _ = solve_uc(system, tree,
                              options(horizon=3, first_stage=3,
                                      largest_loss_mode="optimised"))
    assert np.all(solution.output["base"] >= 300.0 - 1e-6)
    assert np.all(solution.output["base"] <= 500.0 + 1e-6)
    assert np.all(solution.commit["base"] == 1.0)


def test_optimised_mode_never_costs_more():
    system = toy_system()
    tree = toy_tree(system)
    fixed, _, _ = solve_uc(system, tree, options(largest_loss_mode="fixed"))
    opt, _, _ = solve_uc(system, tree, options(largest_loss_mode="optimised"))
    assert opt.expected_cost <= fixed.expected_cost + 1e-6 * fixed.expected_cost


def test_commitments_are_shared_across_branches():
    system = toy_system()
    tree = toy_tree(system)
    solution, model, _ = solve_uc(system, tree, options(horizon=3, first_stage=3))
    # one commitment variable per unit and period, none indexed by branch
    for g in system.generators:
        assert solution.commit[g.id].shape == (3,)
        assert not model.has_variable(f"x[{g.id}][0][0]")
    # recourse reacts to the branches
    spread = max(
        float(np.ptp(solution.output[g.id][t]))
        for g in system.generators for t in range(3)
    )
    assert spread + float(np.ptp(solution.wind_used, axis=1).max()) > 1.0


def test_dropping_frequency_rows_never_raises_cost():
    system = toy_system()
    tree = toy_tree(system)
    secured, _, _ = solve_uc(system, tree, options())
    relaxed, _, _ = solve_uc(system, tree, options(frequency_constraints=False))
    assert relaxed.expected_cost <= secured.expected_cost + 1e-6 * secured.expected_cost


def test_expected_cost_decomposes():
    system = toy_system()
    tree = toy_tree(system)
    solution, _, _ = solve_uc(system, tree, options(horizon=4, first_stage=4))
    total = (solution.no_load_cost + solution.startup_cost
             + float(solution.probabilities @ solution.fuel_cost))
    assert total == pytest.approx(solution.expected_cost, rel=1e-6)


def test_secured_window_passes_swing_verification():
    system = toy_system()
    tree = toy_tree(system)
    solution, _, _ = solve_uc(system, tree, options())
    report = verify_solution(solution, system)
    assert len(report.checks) == 18
    assert report.ok, [
        (c.period, c.scenario) for c in report.failures()
    ]


def test_unsecured_window_fails_when_security_is_unattainable():
    system = toy_system(df_max=0.3)
    tree = toy_tree(system)
    opts = options(frequency_constraints=False)
    solution, _, _ = solve_uc(system, tree, opts)
    report = verify_solution(solution, system)
    assert not report.ok


def test_infeasible_security_is_reported_not_hidden():
    system = toy_system(df_max=0.3)
    tree = toy_tree(system)
    solution, _, raw = solve_uc(system, tree, options(horizon=2, first_stage=2))
    assert solution is None
    assert raw.status == "infeasible"
    run = solve_rolling_horizon(system, toy_tree(system),
                                options(horizon=2, first_stage=2))
    assert not run.ok
    assert run.status == "solver"
    assert "period 0" in run.message


def test_minimum_up_time_rows_bind():
    system = toy_system()
    tree = toy_tree(system)
    opts = options(frequency_constraints=False)
    pins = {g.id: [1] * 6 for g in system.generators}
    pins["mid"] = [0, 0, 1, 0, 0, 0]   # a single-period visit breaks min_up=2
    model = build_uc(system, tree, opts, fixed_commitments=pins)
    from frequc.milp import solve
    assert solve(model, SolveOptions()).status == "infeasible"
    pins["mid"] = [0, 0, 1, 1, 0, 0]
    model = build_uc(system, tree, opts, fixed_commitments=pins)
    assert solve(model, SolveOptions()).status == "optimal"


def test_tree_slicing_and_realized_path():
    system = toy_system()
    tree = toy_tree(system)
    part = slice_tree(tree, 2, 3)
    assert part.n_periods == 3
    assert part.branches[0].net_demand == tree.branches[0].net_demand[2:5]
    assert part.root == pytest.approx(tree.branches[1].net_demand[2])
    realized = realized_series(tree)
    assert realized == pytest.approx(np.array(tree.branches[1].net_demand))
    with pytest.raises(SchedulerError):
        slice_tree(tree, 4, 4)


def test_advance_state_accumulates_runs():
    state = {"a": UnitState(on=True, hours=3), "b": UnitState(on=False, hours=2)}
    nxt = _advance_state(state, {"a": [1, 1], "b": [1, 0]}, 2)
    assert nxt["a"] == UnitState(on=True, hours=5)
    assert nxt["b"] == UnitState(on=False, hours=1)
    nxt = _advance_state(nxt, {"a": [0, 0], "b": [0, 0]}, 2)
    assert nxt["a"] == UnitState(on=False, hours=2)
    assert nxt["b"] == UnitState(on=False, hours=3)


def test_rolling_run_covers_the_span():
    system = toy_system()
    tree = toy_tree(system)
    run = solve_rolling_horizon(system, tree, options(horizon=4, first_stage=2))
    assert run.ok
    assert len(run.windows) == 3
    traj = run.trajectory
    assert np.array_equal(traj.periods, np.arange(6))
    served = sum(traj.output[g.id] for g in system.generators) + traj.wind_used
    assert served == pytest.approx(np.array(system.demand_profile), abs=1e-6)
    thermal = served - traj.wind_used
    assert thermal == pytest.approx(realized_series(tree) + traj.curtailment,
                                    abs=1e-6)
    assert traj.total_cost == pytest.approx(
        traj.fuel_cost.sum() + traj.no_load_cost.sum() + traj.startup_cost.sum())
    assert verify_trajectory(traj, system).ok


def test_single_window_rolling_matches_direct_solve():
    system = toy_system()
    tree = toy_tree(system)
    run = solve_rolling_horizon(system, tree, options())
    assert run.ok and len(run.windows) == 1
    direct, _, _ = solve_uc(system, tree, options())
    assert run.windows[0].expected_cost == pytest.approx(direct.expected_cost,
                                                         rel=1e-9)
    assert run.expected_cost == pytest.approx(direct.expected_cost, rel=1e-6)
    # committed periods re-dispatched at the median path stay on commitments
    for g in system.generators:
        assert np.array_equal(run.trajectory.commit[g.id], direct.commit[g.id])


def test_deterministic_rolling_matches_single_shot():
    system = toy_system()
    net = tuple(d - 40.0 for d in system.demand_profile)
    tree = ScenarioTree(root=net[0], branches=(ScenarioBranch(net, 1.0),),
                        quantile_levels=(0.5,))
    rolled = solve_rolling_horizon(system, tree, options(first_stage=1))
    assert rolled.ok and len(rolled.windows) == 6
    direct, _, _ = solve_uc(system, tree, options())
    assert rolled.trajectory.total_cost == pytest.approx(direct.expected_cost,
                                                         rel=1e-6)


def test_duplicate_branches_collapse_to_deterministic():
    system = toy_system()
    net = tuple(d - 60.0 for d in system.demand_profile)
    single = ScenarioTree(root=net[0],
                          branches=(ScenarioBranch(net, 1.0),),
                          quantile_levels=(0.5,))
    double = ScenarioTree(root=net[0],
                          branches=(ScenarioBranch(net, 0.4), ScenarioBranch(net, 0.6)),
                          quantile_levels=(0.3, 0.7))
    lone, _, _ = solve_uc(system, single, options())
    dup, _, _ = solve_uc(system, double, options())
    assert dup.expected_cost == pytest.approx(lone.expected_cost, rel=1e-6)


def test_cost_of_frequency_services_is_nonnegative():
    system = toy_system()
    tree = toy_tree(system)
    value = cost_of_frequency_services(system, tree, options())
    off = solve_rolling_horizon(system, tree, options(frequency_constraints=False))
    assert value >= -1e-6 * off.trajectory.total_cost
    assert value > 0.0


def test_load_factor_and_emissions_read_the_trajectory():
    system = toy_system()
    tree = toy_tree(system)
    run = solve_rolling_horizon(system, tree, options(largest_loss_mode="fixed"))
    traj = run.trajectory
    assert load_factor(traj, "base") == pytest.approx(1.0, abs=1e-9)
    expected = sum(
        g.emissions_rate * traj.output[g.id].sum() for g in system.generators
    )
    assert emissions(traj, system) == pytest.approx(expected)
    with pytest.raises(KeyError):
        load_factor(traj, "ghost")
