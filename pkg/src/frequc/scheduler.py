"""Frequency-secured stochastic unit commitment and rolling simulation.

``build_uc`` assembles one scheduling window as a mixed-integer model.
Commitments (and the implied start/stop indicators) are first-stage
decisions shared by every net-demand branch; dispatch, response holdings
and the sizable-loss quantities are recourse, one copy per period and
branch.  When frequency constraints are enabled the rows come from
:mod:`frequc.freqsec`, so a solution is secure by construction up to the
loss-segment discretization.

``solve_rolling_horizon`` walks a longer span window by window,
re-dispatches the committed periods against the realized net demand and
stitches the results into a :class:`Trajectory`, from which the study
metrics (cost of frequency services, load factors, emissions) are read.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import freqsec
from .freqdyn import certify_operating_point
from .milp import MilpModel, ModelError, SolveOptions, solve
from .milp.model import SENSE_EQ, SENSE_GE, SENSE_LE
from .sysmodel import ScenarioBranch, ScenarioTree, largest_unit

LOSS_MODES = ("fixed", "optimised")


class SchedulerError(ValueError):
    """Raised for inconsistent scheduling inputs or unusable windows."""


@dataclass(frozen=True)
class UcOptions:
    """Knobs for one scheduling window.

    ``largest_loss_mode`` selects how the largest plant is operated:
    ``fixed`` pins it at maximum output, ``optimised`` lets the solver
    deload it (when the unit allows deloading) so the sizable loss
    becomes a decision.  The plant is committed in both modes.
    """

    frequency_constraints: bool = True
    deloading_enabled: bool = True
    horizon: int = 8
    first_stage: int = 1
    largest_loss_mode: str = "optimised"

    def __post_init__(self):
        if self.horizon < 1:
            raise SchedulerError("options: horizon must be at least 1 period")
        if not (1 <= self.first_stage <= self.horizon):
            raise SchedulerError(
                "options: first_stage must lie in [1, horizon], got "
                f"{self.first_stage} with horizon {self.horizon}"
            )
        if self.largest_loss_mode not in LOSS_MODES:
            raise SchedulerError(
                f"options: unknown largest_loss_mode {self.largest_loss_mode!r}"
            )


@dataclass(frozen=True)
class UnitState:
    """Commitment state carried across windows: on/off and for how long."""

    on: bool
    hours: int

    def __post_init__(self):
        if self.hours < 0:
            raise SchedulerError("unit state: hours must be >= 0")


def default_initial_state(system) -> dict:
    """Everything off, long enough ago that no minimum-time carry applies."""
    return {g.id: UnitState(on=False, hours=10_000) for g in system.generators}


def _window_net(system, tree, start_period: int, n_periods: int):
    """Demand slice and per-branch net demand with feasibility screens."""
    if start_period < 0 or start_period + n_periods > system.n_periods:
        raise SchedulerError(
            f"window [{start_period}, {start_period + n_periods}) falls outside "
            f"the {system.n_periods}-period demand profile"
        )
    demand = np.array(system.demand_profile[start_period:start_period + n_periods])
    net = np.array([
        [br.net_demand[t] for br in tree.branches] for t in range(n_periods)
    ])
    cap = sum(g.p_max for g in system.generators)
    for t in range(n_periods):
        for s in range(len(tree.branches)):
            if net[t, s] > cap + 1e-9:
                raise SchedulerError(
                    f"period {start_period + t}, branch {s}: net demand "
                    f"{net[t, s]:.1f} MW exceeds dispatchable capacity {cap:.1f} MW"
                )
            if net[t, s] > demand[t] + 1e-9:
                raise SchedulerError(
                    f"period {start_period + t}, branch {s}: net demand "
                    f"{net[t, s]:.1f} MW exceeds demand {demand[t]:.1f} MW "
                    "(negative wind availability)"
                )
    return demand, net


def _largest_runs_deloaded(options: UcOptions, big) -> bool:
    return (options.largest_loss_mode == "optimised"
            and options.deloading_enabled and big.deloadable)


def build_uc(system, tree, options: UcOptions, *, start_period: int = 0,
             initial_state=None, fixed_commitments=None) -> MilpModel:
    """Assemble the scheduling model for one window.

    The window covers the first ``min(options.horizon, tree.n_periods)``
    periods of ``tree``, aligned with the demand profile at
    ``start_period``.  ``fixed_commitments`` (generator id -> 0/1 values
    per window period) pins the commitment variables; the rolling solver
    uses this for the realized re-dispatch.
    """
    fleet = system.generators
    freq = system.frequency
    big = largest_unit(fleet)
    n_periods = min(options.horizon, tree.n_periods)
    if n_periods < 1:
        raise SchedulerError("window: scenario branches carry no periods")
    n_branches = len(tree.branches)
    probs = [br.probability for br in tree.branches]
    demand, net = _window_net(system, tree, start_period, n_periods)
    avail = demand[:, None] - net

    floor_big = ((1.0 - big.max_deload_fraction) * big.p_max
                 if _largest_runs_deloaded(options, big) else big.p_max)
    for t in range(n_periods):
        if floor_big > demand[t] + 1e-9:
            raise SchedulerError(
                f"period {start_period + t}: demand {demand[t]:.1f} MW cannot "
                f"absorb the committed largest plant minimum {floor_big:.1f} MW"
            )

    r_max = sum(g.pfr_max for g in fleet)
    if options.frequency_constraints and r_max <= 0.0:
        raise SchedulerError(
            "frequency constraints need at least one unit with response capability"
        )

    if initial_state is None:
        initial_state = default_initial_state(system)
    for g in fleet:
        if g.id not in initial_state:
            raise SchedulerError(f"initial state missing unit {g.id}")

    model = MilpModel(name=f"uc_p{start_period}_{n_periods}x{n_branches}")

    # first-stage commitment, start and stop indicators (shared by branches)
    x = {}
    su = {}
    sd = {}
    for g in fleet:
        for t in range(n_periods):
            tt = start_period + t
            x[g.id, t] = model.add_binary(f"x[{g.id}][{tt}]")
            su[g.id, t] = model.add_continuous(f"su[{g.id}][{tt}]", 0.0, 1.0)
            sd[g.id, t] = model.add_continuous(f"sd[{g.id}][{tt}]", 0.0, 1.0)

    # recourse dispatch per period and branch
    p = {}
    r = {}
    wind = {}
    for t in range(n_periods):
        tt = start_period + t
        for s in range(n_branches):
            for g in fleet:
                p[g.id, t, s] = model.add_continuous(
                    f"p[{g.id}][{tt}][{s}]", 0.0, g.p_max)
                r[g.id, t, s] = model.add_continuous(
                    f"r[{g.id}][{tt}][{s}]", 0.0, g.pfr_max)
            wind[t, s] = model.add_continuous(
                f"wind[{tt}][{s}]", 0.0, max(avail[t, s], 0.0))

    cells = {}
    if options.frequency_constraints:
        for t in range(n_periods):
            tt = start_period + t
            for s in range(n_branches):
                tag = f"[{tt}][{s}]"
                loss = model.add_continuous(
                    f"ploss{tag}", 0.0, freq.largest_unit_rating)
                loss_nadir = model.add_continuous(
                    f"pnadir{tag}", 0.0, freq.nadir_segments[-1])
                segment = tuple(
                    model.add_binary(f"mseg{tag}[{i}]")
                    for i in range(len(freq.nadir_segments))
                )
                bilin = {g.id: model.add_continuous(f"z[{g.id}]{tag}", 0.0, r_max)
                         for g in fleet if g.synchronous}
                cells[t, s] = freqsec.FreqDecisionSet(
                    commit={g.id: x[g.id, t] for g in fleet},
                    output={g.id: p[g.id, t, s] for g in fleet},
                    pfr={g.id: r[g.id, t, s] for g in fleet},
                    loss=loss, loss_nadir=loss_nadir,
                    segment=segment, bilinear=bilin,
                )

    # the largest plant is committed throughout; minimum-time carry and
    # externally pinned schedules come next and must agree with it
    for t in range(n_periods):
        model.fix_variable(x[big.id, t], 1.0)
    try:
        for g in fleet:
            state = initial_state[g.id]
            if state.on and state.hours < g.min_up:
                for t in range(min(g.min_up - state.hours, n_periods)):
                    model.fix_variable(x[g.id, t], 1.0)
            elif not state.on and state.hours < g.min_down:
                for t in range(min(g.min_down - state.hours, n_periods)):
                    model.fix_variable(x[g.id, t], 0.0)
        if fixed_commitments is not None:
            for g in fleet:
                values = fixed_commitments[g.id]
                if len(values) < n_periods:
                    raise SchedulerError(
                        f"fixed commitments for {g.id} cover {len(values)} of "
                        f"{n_periods} window periods"
                    )
                for t in range(n_periods):
                    model.fix_variable(x[g.id, t], round(float(values[t])))
    except ModelError as exc:
        raise SchedulerError(
            f"commitment requirements conflict: {exc}"
        ) from exc

    def add(row):
        model.add_row(row.coeffs, row.sense, row.rhs, row.label)

    # power balance and unit limits
    for t in range(n_periods):
        tt = start_period + t
        for s in range(n_branches):
            coeffs = {p[g.id, t, s]: 1.0 for g in fleet}
            coeffs[wind[t, s]] = 1.0
            model.add_row(coeffs, SENSE_EQ, demand[t], f"balance[{tt}][{s}]")
            for g in fleet:
                if g.p_min > 0.0:
                    model.add_row(
                        {p[g.id, t, s]: 1.0, x[g.id, t]: -g.p_min},
                        SENSE_GE, 0.0, f"pmin[{g.id}][{tt}][{s}]")
                model.add_row(
                    {p[g.id, t, s]: 1.0, r[g.id, t, s]: 1.0,
                     x[g.id, t]: -g.p_max},
                    SENSE_LE, 0.0, f"headroom[{g.id}][{tt}][{s}]")
                if g.pfr_max > 0.0:
                    model.add_row(
                        {r[g.id, t, s]: 1.0, x[g.id, t]: -g.pfr_max},
                        SENSE_LE, 0.0, f"pfr_cap[{g.id}][{tt}][{s}]")

    # largest-plant operating mode
    for t in range(n_periods):
        tt = start_period + t
        for s in range(n_branches):
            if _largest_runs_deloaded(options, big):
                model.add_row({p[big.id, t, s]: 1.0}, SENSE_GE, floor_big,
                              f"deload_floor[{tt}][{s}]")
            else:
                model.add_row({p[big.id, t, s]: 1.0}, SENSE_EQ, big.p_max,
                              f"fix_largest[{tt}][{s}]")

    # start/stop linking and minimum up/down times
    for g in fleet:
        state = initial_state[g.id]
        for t in range(n_periods):
            tt = start_period + t
            coeffs = {x[g.id, t]: 1.0, su[g.id, t]: -1.0, sd[g.id, t]: 1.0}
            if t == 0:
                model.add_row(coeffs, SENSE_EQ, 1.0 if state.on else 0.0,
                              f"commit_link[{g.id}][{tt}]")
            else:
                coeffs[x[g.id, t - 1]] = -1.0
                model.add_row(coeffs, SENSE_EQ, 0.0,
                              f"commit_link[{g.id}][{tt}]")
        if g.min_up > 1:
            for t in range(n_periods):
                coeffs = {su[g.id, tau]: 1.0
                          for tau in range(max(0, t - g.min_up + 1), t + 1)}
                coeffs[x[g.id, t]] = -1.0
                model.add_row(coeffs, SENSE_LE, 0.0,
                              f"min_up[{g.id}][{start_period + t}]")
        if g.min_down > 1:
            for t in range(n_periods):
                coeffs = {sd[g.id, tau]: 1.0
                          for tau in range(max(0, t - g.min_down + 1), t + 1)}
                coeffs[x[g.id, t]] = 1.0
                model.add_row(coeffs, SENSE_LE, 1.0,
                              f"min_down[{g.id}][{start_period + t}]")

    # frequency-security rows
    if options.frequency_constraints:
        for t in range(n_periods):
            tt = start_period + t
            add(freqsec.inertia_floor_row(cells[t, 0], fleet, freq,
                                          tag=f"[{tt}]"))
            for s in range(n_branches):
                tag = f"[{tt}][{s}]"
                dec = cells[t, s]
                for row in freqsec.largest_loss_rows(dec, fleet, tag=tag):
                    add(row)
                inertia = freqsec.inertia_expression(dec, fleet, freq)
                add(freqsec.rocof_row(dec, freq, inertia, tag=tag))
                add(freqsec.qss_row(dec, freq, demand[t], tag=tag))
                hr, bigm_rows = freqsec.linearize_inertia_pfr(
                    dec, fleet, freq, r_max, tag=tag)
                for row in bigm_rows:
                    add(row)
                for row in freqsec.nadir_discretization_rows(
                        dec, freq, demand[t], hr, tag=tag):
                    add(row)

    # probability-weighted operating cost
    hours = system.period_hours
    objective = {}
    for g in fleet:
        for t in range(n_periods):
            if g.no_load_cost > 0.0:
                objective[x[g.id, t]] = g.no_load_cost * hours
            if g.startup_cost > 0.0:
                objective[su[g.id, t]] = g.startup_cost
            if g.marginal_cost != 0.0:
                for s in range(n_branches):
                    objective[p[g.id, t, s]] = probs[s] * g.marginal_cost * hours
    model.set_objective(objective)
    model.validate()
    return model


@dataclass
class UcSolution:
    """Solved window unpacked into per-period, per-branch arrays.

    Commitment arrays have shape ``(T,)``; dispatch arrays ``(T, S)``;
    ``segments`` is ``(T, S, n_segments)``.  The loss arrays are ``None``
    when the window was built without frequency constraints.
    """

    start_period: int
    periods: np.ndarray
    probabilities: np.ndarray
    demand: np.ndarray
    commit: dict
    startup: dict
    output: dict
    pfr: dict
    loss: np.ndarray | None
    loss_nadir: np.ndarray | None
    segments: np.ndarray | None
    wind_used: np.ndarray
    curtailment: np.ndarray
    load_served: np.ndarray
    fuel_cost: np.ndarray
    no_load_cost: float
    startup_cost: float
    expected_cost: float
    status: str
    gap: float
    nodes: int


def extract_solution(model: MilpModel, system, tree, options: UcOptions,
                     result, *, start_period: int = 0) -> UcSolution:
    """Read a solver result back into named arrays."""
    if result.values is None:
        raise SchedulerError(f"cannot extract values from a {result.status} result")
    fleet = system.generators
    n_periods = min(options.horizon, tree.n_periods)
    n_branches = len(tree.branches)
    demand, net = _window_net(system, tree, start_period, n_periods)
    avail = demand[:, None] - net
    values = result.values

    def val(name):
        return float(values[model.variable_by_name(name).index])

    commit = {}
    startup = {}
    output = {}
    pfr = {}
    for g in fleet:
        commit[g.id] = np.array([
            round(val(f"x[{g.id}][{start_period + t}]"))
            for t in range(n_periods)
        ], dtype=float)
        startup[g.id] = np.array([
            val(f"su[{g.id}][{start_period + t}]") for t in range(n_periods)
        ])
        output[g.id] = np.array([
            [val(f"p[{g.id}][{start_period + t}][{s}]")
             for s in range(n_branches)]
            for t in range(n_periods)
        ])
        pfr[g.id] = np.array([
            [val(f"r[{g.id}][{start_period + t}][{s}]")
             for s in range(n_branches)]
            for t in range(n_periods)
        ])
    wind_used = np.array([
        [val(f"wind[{start_period + t}][{s}]") for s in range(n_branches)]
        for t in range(n_periods)
    ])
    loss = loss_nadir = segments = None
    if options.frequency_constraints:
        loss = np.array([
            [val(f"ploss[{start_period + t}][{s}]") for s in range(n_branches)]
            for t in range(n_periods)
        ])
        loss_nadir = np.array([
            [val(f"pnadir[{start_period + t}][{s}]") for s in range(n_branches)]
            for t in range(n_periods)
        ])
        n_seg = len(system.frequency.nadir_segments)
        segments = np.array([
            [[val(f"mseg[{start_period + t}][{s}][{i}]") for i in range(n_seg)]
             for s in range(n_branches)]
            for t in range(n_periods)
        ])
        # Any grid point at or above the loss satisfies the segment rows, so
        # the solver may return a slack one; report the binding grid point so
        # the discretized loss does not depend on the backend's tie-breaking.
        grid = np.asarray(system.frequency.nadir_segments)
        for t in range(n_periods):
            for s in range(n_branches):
                k = min(int(np.searchsorted(grid, loss[t, s] - 1e-6)),
                        n_seg - 1)
                if grid[k] < loss_nadir[t, s] - 1e-9:
                    loss_nadir[t, s] = grid[k]
                    segments[t, s, :] = 0.0
                    segments[t, s, k] = 1.0

    hours = system.period_hours
    probabilities = np.array([br.probability for br in tree.branches])
    fuel = np.zeros(n_branches)
    for g in fleet:
        fuel += g.marginal_cost * hours * output[g.id].sum(axis=0)
    no_load = sum(g.no_load_cost * hours * commit[g.id].sum() for g in fleet)
    start_cost = sum(g.startup_cost * startup[g.id].sum() for g in fleet)
    load_served = sum(output[g.id] for g in fleet) + wind_used
    return UcSolution(
        start_period=start_period,
        periods=np.arange(start_period, start_period + n_periods),
        probabilities=probabilities,
        demand=demand,
        commit=commit,
        startup=startup,
        output=output,
        pfr=pfr,
        loss=loss,
        loss_nadir=loss_nadir,
        segments=segments,
        wind_used=wind_used,
        curtailment=avail - wind_used,
        load_served=load_served,
        fuel_cost=fuel,
        no_load_cost=float(no_load),
        startup_cost=float(start_cost),
        expected_cost=float(result.objective),
        status=result.status,
        gap=result.gap,
        nodes=result.nodes,
    )


def solve_uc(system, tree, options: UcOptions, solve_options=None, *,
             start_period: int = 0, initial_state=None,
             fixed_commitments=None):
    """Build, solve and unpack one window; returns (solution, model, raw)."""
    model = build_uc(system, tree, options, start_period=start_period,
                     initial_state=initial_state,
                     fixed_commitments=fixed_commitments)
    raw = solve(model, solve_options or SolveOptions())
    if raw.status != "optimal":
        return None, model, raw
    solution = extract_solution(model, system, tree, options, raw,
                                start_period=start_period)
    return solution, model, raw


# -- post-solve security verification ---------------------------------------

@dataclass(frozen=True)
class CellCheck:
    period: int
    scenario: int
    inertia: float
    pfr: float
    loss: float
    report: object


@dataclass
class VerificationReport:
    checks: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.report.ok for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.report.ok]


def committed_inertia(system, commit_values) -> float:
    """Post-loss inertia (MW s^2) for one period's commitment pattern."""
    freq = system.frequency
    total = sum(
        g.inertia_const * g.p_max / freq.f0 * commit_values[g.id]
        for g in system.generators if g.synchronous
    )
    return total - freq.largest_unit_rating * freq.largest_unit_inertia / freq.f0


def verify_solution(solution: UcSolution, system, tol: float = 1e-9) -> VerificationReport:
    """Swing-check every period/branch of a solved window.

    Without the loss variable (frequency constraints off) the implied
    loss is the largest single-unit output, so the report grades what a
    cost-only schedule would actually risk.
    """
    freq = system.frequency
    fleet = system.generators
    report = VerificationReport()
    n_periods, n_branches = solution.wind_used.shape
    for t in range(n_periods):
        x_t = {g.id: solution.commit[g.id][t] for g in fleet}
        inertia = committed_inertia(system, x_t)
        damping_product = freq.damping * solution.demand[t]
        for s in range(n_branches):
            total_pfr = sum(float(solution.pfr[g.id][t, s]) for g in fleet)
            if solution.loss is not None:
                loss = float(solution.loss[t, s])
            else:
                loss = max(float(solution.output[g.id][t, s]) for g in fleet)
            _, sec = certify_operating_point(
                inertia, damping_product, total_pfr, freq.t_d, loss, freq,
                tol=tol)
            report.checks.append(CellCheck(
                period=int(solution.periods[t]), scenario=s,
                inertia=inertia, pfr=total_pfr, loss=loss, report=sec))
    return report


# -- rolling horizon ---------------------------------------------------------

def realized_series(tree: ScenarioTree) -> np.ndarray:
    """Median net-demand path used as the out-turn in simulations."""
    levels = np.array(tree.quantile_levels)
    table = np.array([br.net_demand for br in tree.branches])
    return np.array([
        float(np.interp(0.5, levels, table[:, t]))
        for t in range(tree.n_periods)
    ])


def slice_tree(tree: ScenarioTree, start: int, length: int) -> ScenarioTree:
    """Window view of a scenario tree, recomputing the root value."""
    if start < 0 or length < 1 or start + length > tree.n_periods:
        raise SchedulerError(
            f"tree slice [{start}, {start + length}) outside the "
            f"{tree.n_periods}-period tree"
        )
    levels = np.array(tree.quantile_levels)
    first = [br.net_demand[start] for br in tree.branches]
    return ScenarioTree(
        root=float(np.interp(0.5, levels, first)),
        branches=tuple(
            ScenarioBranch(br.net_demand[start:start + length], br.probability)
            for br in tree.branches
        ),
        quantile_levels=tree.quantile_levels,
    )


def _advance_state(state: dict, commit_slice: dict, steps: int) -> dict:
    nxt = {}
    for gid, prev in state.items():
        values = commit_slice[gid]
        last = bool(round(float(values[-1])))
        run = 0
        for v in reversed(values):
            if bool(round(float(v))) != last:
                break
            run += 1
        if run == steps and prev.on == last:
            run += prev.hours
        nxt[gid] = UnitState(on=last, hours=run)
    return nxt


@dataclass
class Trajectory:
    """Committed periods of a rolling run, dispatched at the realized path."""

    periods: np.ndarray
    period_hours: float
    demand: np.ndarray
    net_realized: np.ndarray
    commit: dict
    output: dict
    pfr: dict
    loss: np.ndarray
    loss_nadir: np.ndarray
    wind_used: np.ndarray
    curtailment: np.ndarray
    fuel_cost: np.ndarray
    no_load_cost: np.ndarray
    startup_cost: np.ndarray
    p_max: dict

    @property
    def total_cost(self) -> float:
        return float(self.fuel_cost.sum() + self.no_load_cost.sum()
                     + self.startup_cost.sum())


def expected_period_cost(solution: UcSolution, system) -> np.ndarray:
    """Probability-weighted cost of each window period (commitment + fuel)."""
    hours = system.period_hours
    n_periods = len(solution.periods)
    cost = np.zeros(n_periods)
    for g in system.generators:
        cost += g.no_load_cost * hours * solution.commit[g.id]
        cost += g.startup_cost * solution.startup[g.id]
        cost += (g.marginal_cost * hours
                 * (solution.output[g.id] @ solution.probabilities))
    return cost


@dataclass
class RollingResult:
    windows: list
    trajectory: Trajectory | None
    status: str
    message: str = ""
    expected_cost: float = float("nan")

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _assemble_trajectory(system, scenarios, pieces) -> Trajectory:
    fleet = system.generators
    hours = system.period_hours
    n = sum(len(piece.periods) for piece in pieces)
    periods = np.concatenate([piece.periods for piece in pieces])
    demand = np.concatenate([piece.demand for piece in pieces])
    commit = {g.id: np.concatenate([piece.commit[g.id] for piece in pieces])
              for g in fleet}
    output = {g.id: np.concatenate([piece.output[g.id][:, 0] for piece in pieces])
              for g in fleet}
    pfr = {g.id: np.concatenate([piece.pfr[g.id][:, 0] for piece in pieces])
           for g in fleet}
    startup = {g.id: np.concatenate([piece.startup[g.id] for piece in pieces])
               for g in fleet}
    if pieces[0].loss is not None:
        loss = np.concatenate([piece.loss[:, 0] for piece in pieces])
        loss_nadir = np.concatenate([piece.loss_nadir[:, 0] for piece in pieces])
    else:
        loss = np.full(n, np.nan)
        loss_nadir = np.full(n, np.nan)
    wind_used = np.concatenate([piece.wind_used[:, 0] for piece in pieces])
    curtailment = np.concatenate([piece.curtailment[:, 0] for piece in pieces])
    fuel = np.zeros(n)
    no_load = np.zeros(n)
    start_cost = np.zeros(n)
    for g in fleet:
        fuel += g.marginal_cost * hours * output[g.id]
        no_load += g.no_load_cost * hours * commit[g.id]
        start_cost += g.startup_cost * startup[g.id]
    return Trajectory(
        periods=periods,
        period_hours=hours,
        demand=demand,
        net_realized=realized_series(scenarios)[:n],
        commit=commit,
        output=output,
        pfr=pfr,
        loss=loss,
        loss_nadir=loss_nadir,
        wind_used=wind_used,
        curtailment=curtailment,
        fuel_cost=fuel,
        no_load_cost=no_load,
        startup_cost=start_cost,
        p_max={g.id: g.p_max for g in fleet},
    )


def solve_rolling_horizon(system, scenarios: ScenarioTree, options: UcOptions,
                          solve_options=None, initial_state=None) -> RollingResult:
    """Window-by-window simulation over the whole demand profile.

    Each window solves the stochastic model, commits its first
    ``options.first_stage`` periods, re-dispatches those periods against
    the realized (median) net demand with commitments pinned, then rolls
    forward.  A window the solver cannot close aborts the run; the
    partial trajectory and the failing status are returned for
    diagnosis.
    """
    if scenarios.n_periods != system.n_periods:
        raise SchedulerError(
            f"scenario tree covers {scenarios.n_periods} periods, the demand "
            f"profile {system.n_periods}"
        )
    sopts = solve_options or SolveOptions()
    state = dict(initial_state) if initial_state is not None \
        else default_initial_state(system)
    realized = realized_series(scenarios)
    n = system.n_periods
    windows = []
    pieces = []
    expected = 0.0

    def partial():
        return _assemble_trajectory(system, scenarios, pieces) if pieces else None

    t0 = 0
    while t0 < n:
        window_len = min(options.horizon, n - t0)
        commit_len = min(options.first_stage, window_len)
        wtree = slice_tree(scenarios, t0, window_len)
        solution, _, raw = solve_uc(
            system, wtree, options, sopts,
            start_period=t0, initial_state=state)
        if solution is None:
            return RollingResult(
                windows, partial(), status="solver",
                message=f"window at period {t0}: {raw.status}")
        windows.append(solution)
        expected += float(
            expected_period_cost(solution, system)[:commit_len].sum())

        commit_slice = {g.id: solution.commit[g.id][:commit_len]
                        for g in system.generators}
        rtree = ScenarioTree(
            root=float(realized[t0]),
            branches=(ScenarioBranch(
                tuple(realized[t0:t0 + commit_len]), 1.0),),
            quantile_levels=(0.5,),
        )
        ropts = replace(options, horizon=commit_len, first_stage=commit_len)
        redispatch, _, raw = solve_uc(
            system, rtree, ropts, sopts,
            start_period=t0, initial_state=state,
            fixed_commitments=commit_slice)
        if redispatch is None:
            return RollingResult(
                windows, partial(), status="solver",
                message=f"re-dispatch at period {t0}: {raw.status}")
        pieces.append(redispatch)
        state = _advance_state(state, commit_slice, commit_len)
        t0 += commit_len

    return RollingResult(windows, _assemble_trajectory(system, scenarios, pieces),
                         status="ok", expected_cost=expected)


def verify_trajectory(trajectory: Trajectory, system, tol: float = 1e-9) -> VerificationReport:
    """Swing-check every committed period of a rolling run."""
    freq = system.frequency
    fleet = system.generators
    report = VerificationReport()
    for t in range(len(trajectory.periods)):
        x_t = {g.id: trajectory.commit[g.id][t] for g in fleet}
        inertia = committed_inertia(system, x_t)
        total_pfr = sum(float(trajectory.pfr[g.id][t]) for g in fleet)
        if np.isfinite(trajectory.loss[t]):
            loss = float(trajectory.loss[t])
        else:
            loss = max(float(trajectory.output[g.id][t]) for g in fleet)
        _, sec = certify_operating_point(
            inertia, freq.damping * trajectory.demand[t], total_pfr,
            freq.t_d, loss, freq, tol=tol)
        report.checks.append(CellCheck(
            period=int(trajectory.periods[t]), scenario=0,
            inertia=inertia, pfr=total_pfr, loss=loss, report=sec))
    return report


# -- study metrics ------------------------------------------------------------

def cost_of_frequency_services(system, scenarios, options: UcOptions,
                               solve_options=None, initial_state=None) -> float:
    """Expected-cost gap between secured and unsecured scheduling.

    Runs the rolling simulation twice, identical except for the
    frequency rows, and differences the probability-weighted committed
    costs.  Window by window the secured model only adds rows, so the
    gap cannot go materially negative.
    """
    results = {}
    for enabled in (True, False):
        run = solve_rolling_horizon(
            system, scenarios,
            replace(options, frequency_constraints=enabled),
            solve_options, initial_state)
        if not run.ok:
            raise SchedulerError(
                f"frequency-services costing failed "
                f"({'secured' if enabled else 'unsecured'} run): {run.message}")
        results[enabled] = run.expected_cost
    return results[True] - results[False]


def load_factor(trajectory: Trajectory, unit_id: str) -> float:
    """Energy produced over the span divided by the unit's maximum energy."""
    if unit_id not in trajectory.output:
        raise KeyError(f"unknown unit {unit_id!r}")
    energy = float(trajectory.output[unit_id].sum()) * trajectory.period_hours
    ceiling = (trajectory.p_max[unit_id] * trajectory.period_hours
               * len(trajectory.periods))
    return energy / ceiling


def emissions(trajectory: Trajectory, system) -> float:
    """Total emissions (tCO2) of the dispatched energy."""
    total = 0.0
    for g in system.generators:
        total += g.emissions_rate * float(trajectory.output[g.id].sum()) \
            * trajectory.period_hours
    return total
