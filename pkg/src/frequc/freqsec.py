"""Frequency-security constraint rows as solver-agnostic linear pieces.

Everything here maps scheduling decisions (commitments, outputs, response
holdings, the sizable-loss variable) onto linear rows: the loss bounds,
the RoCoF and quasi-steady-state requirements, the big-M linearization of
the inertia-times-response product, and the segment discretization of the
nadir requirement.  Row construction is pure; the scheduler owns variable
creation order and period/scenario tagging.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

from .milp.model import LinearRow, LinExpr, MilpModel, SENSE_EQ, SENSE_GE, SENSE_LE


@dataclass(frozen=True)
class FreqDecisionSet:
    """Variable ids for one period/scenario cell.

    ``commit``, ``output``, ``pfr`` and ``bilinear`` map generator id to
    model variable index; ``segment`` holds the loss-segment binaries in
    grid order.
    """

    commit: dict
    output: dict
    pfr: dict
    loss: int
    loss_nadir: int
    segment: tuple
    bilinear: dict


def register_decisions(model: MilpModel, fleet, freq, r_max: float,
                       tag: str = "", commit=None) -> FreqDecisionSet:
    """Create (or adopt) the decision variables for one cell.

    ``commit`` may carry pre-existing commitment variable ids, which is
    how the scheduler shares first-stage binaries across scenarios.
    """
    if commit is None:
        commit = {g.id: model.add_binary(f"x[{g.id}]{tag}") for g in fleet}
    output = {g.id: model.add_continuous(f"p[{g.id}]{tag}", 0.0, g.p_max)
              for g in fleet}
    pfr = {g.id: model.add_continuous(f"r[{g.id}]{tag}", 0.0, g.pfr_max)
           for g in fleet}
    loss = model.add_continuous(f"ploss{tag}", 0.0, freq.largest_unit_rating)
    loss_nadir = model.add_continuous(
        f"pnadir{tag}", 0.0, freq.nadir_segments[-1])
    segment = tuple(model.add_binary(f"mseg{tag}[{i}]")
                    for i in range(len(freq.nadir_segments)))
    bilinear = {g.id: model.add_continuous(f"z[{g.id}]{tag}", 0.0, r_max)
                for g in fleet if g.synchronous}
    return FreqDecisionSet(commit=commit, output=output, pfr=pfr, loss=loss,
                           loss_nadir=loss_nadir, segment=segment,
                           bilinear=bilinear)


def largest_loss_rows(decisions: FreqDecisionSet, fleet, eligible=None,
                      tag: str = ""):
    """One bound per loss source: the sizable loss covers its output."""
    ids = [g.id for g in fleet] if eligible is None else list(eligible)
    if not ids:
        warnings.warn("largest-loss rows: no eligible loss sources")
        return []
    rows = []
    for gid in ids:
        rows.append(LinearRow(
            coeffs={decisions.loss: 1.0, decisions.output[gid]: -1.0},
            sense=SENSE_GE, rhs=0.0, label=f"loss_bound{tag}[{gid}]",
        ))
    return rows


def inertia_expression(decisions: FreqDecisionSet, fleet, freq) -> LinExpr:
    """Post-loss system inertia in MW*s^2 as a function of commitments."""
    expr = LinExpr()
    for g in fleet:
        if g.synchronous:
            expr.add_term(decisions.commit[g.id], g.inertia_const * g.p_max / freq.f0)
    expr.constant = -freq.largest_unit_rating * freq.largest_unit_inertia / freq.f0
    return expr


def inertia_floor_row(decisions: FreqDecisionSet, fleet, freq,
                      tag: str = "") -> LinearRow:
    """Post-loss inertia must not go negative for any commitment."""
    expr = inertia_expression(decisions, fleet, freq)
    return LinearRow(coeffs=dict(expr.coeffs), sense=SENSE_GE,
                     rhs=-expr.constant, label=f"h_min{tag}")


def rocof_row(decisions: FreqDecisionSet, freq, inertia: LinExpr,
              tag: str = "") -> LinearRow:
    """Initial rate-of-change limit: H >= loss / (2 * rocof_max)."""
    coeffs = dict(inertia.coeffs)
    coeffs[decisions.loss] = coeffs.get(decisions.loss, 0.0) - 1.0 / (2.0 * freq.rocof_max)
    return LinearRow(coeffs=coeffs, sense=SENSE_GE, rhs=-inertia.constant,
                     label=f"rocof{tag}")


def qss_row(decisions: FreqDecisionSet, freq, demand: float,
            tag: str = "") -> LinearRow:
    """Quasi-steady-state recovery: total response covers the loss minus
    the damping relief."""
    coeffs = {idx: 1.0 for idx in decisions.pfr.values()}
    coeffs[decisions.loss] = -1.0
    rhs = -freq.damping * demand * freq.df_ss_max
    return LinearRow(coeffs=coeffs, sense=SENSE_GE, rhs=rhs, label=f"qss{tag}")


def nadir_beta(freq, demand: float) -> float:
    return freq.damping * demand * freq.t_d / 4.0


def nadir_requirement(p_loss: float, freq, demand: float) -> float:
    """Inertia-times-response needed for the nadir, linear damping rule."""
    if p_loss < 0.0:
        raise ValueError("p_loss must be >= 0")
    quad = p_loss * p_loss * freq.t_d / (4.0 * freq.df_max)
    return quad - nadir_beta(freq, demand) * p_loss


def linearize_inertia_pfr(decisions: FreqDecisionSet, fleet, freq,
                          r_max: float, tag: str = ""):
    """Exact product H*R via one auxiliary per synchronous unit.

    Returns the linear expression for the product and the rows that pin
    each auxiliary z_g to x_g * R.  Exactness holds at every feasible
    point with binary commitments and 0 <= R <= r_max.
    """
    if r_max <= 0.0:
        raise ValueError("r_max must be positive")
    rows = []
    expr = LinExpr()
    all_pfr = list(decisions.pfr.values())
    loss_coef = freq.largest_unit_rating * freq.largest_unit_inertia / freq.f0
    for g in fleet:
        if not g.synchronous:
            continue
        z = decisions.bilinear[g.id]
        x = decisions.commit[g.id]
        # z <= R
        coeffs = {idx: -1.0 for idx in all_pfr}
        coeffs[z] = 1.0
        rows.append(LinearRow(coeffs=coeffs, sense=SENSE_LE, rhs=0.0,
                              label=f"bigm_r{tag}[{g.id}]"))
        # z <= r_max * x
        rows.append(LinearRow(coeffs={z: 1.0, x: -r_max}, sense=SENSE_LE,
                              rhs=0.0, label=f"bigm_x{tag}[{g.id}]"))
        # z >= R - r_max * (1 - x)
        coeffs = {idx: -1.0 for idx in all_pfr}
        coeffs[z] = 1.0
        coeffs[x] = -r_max
        rows.append(LinearRow(coeffs=coeffs, sense=SENSE_GE, rhs=-r_max,
                              label=f"bigm_lo{tag}[{g.id}]"))
        expr.add_term(z, g.inertia_const * g.p_max / freq.f0)
    # subtract the lost unit's share: -(rating * H_L / f0) * R
    for idx in all_pfr:
        expr.add_term(idx, -loss_coef)
    return expr, rows


def nadir_discretization_rows(decisions: FreqDecisionSet, freq, demand: float,
                              hr_expr: LinExpr, tag: str = "",
                              strengthen: bool = True):
    """Segment activation of the nadir requirement plus chord cuts.

    Exactly one segment is selected; the selected grid value bounds the
    loss from above and prices the requirement.  Optional chord rows link
    consecutive grid points directly in (loss, H*R) space; they are
    redundant at integer points but tighten the relaxation.
    """
    segments = freq.nadir_segments
    if len(decisions.segment) != len(segments):
        raise ValueError("segment binaries do not match the configured grid")
    if segments[-1] < freq.largest_unit_rating - 1e-9:
        raise ValueError("segment grid does not cover the largest unit rating")
    beta = nadir_beta(freq, demand)
    turn = freq.damping * demand * freq.df_max / 2.0
    if segments[0] < turn - 1e-9:
        raise ValueError(
            "segment grid enters the region where the requirement decreases "
            f"(values below {turn:.3f} MW); discretization would not be conservative"
        )
    rows = []
    # exactly one active segment
    rows.append(LinearRow(
        coeffs={idx: 1.0 for idx in decisions.segment},
        sense=SENSE_EQ, rhs=1.0, label=f"nadir_select{tag}",
    ))
    # the discretized loss equals the selected grid value ...
    coeffs = {decisions.loss_nadir: 1.0}
    for i, idx in enumerate(decisions.segment):
        coeffs[idx] = -segments[i]
    rows.append(LinearRow(coeffs=coeffs, sense=SENSE_EQ, rhs=0.0,
                          label=f"nadir_link{tag}"))
    # ... and dominates the actual loss
    rows.append(LinearRow(
        coeffs={decisions.loss_nadir: 1.0, decisions.loss: -1.0},
        sense=SENSE_GE, rhs=0.0, label=f"nadir_dominates{tag}",
    ))
    # requirement row per segment, vacuous unless selected
    for i, idx in enumerate(decisions.segment):
        need = nadir_requirement(segments[i], freq, demand)
        big_m = max(0.0, need)
        coeffs = dict(hr_expr.coeffs)
        coeffs[idx] = coeffs.get(idx, 0.0) - big_m
        rows.append(LinearRow(
            coeffs=coeffs, sense=SENSE_GE,
            rhs=need - big_m - hr_expr.constant,
            label=f"nadir_seg{tag}[{i}]",
        ))
    if strengthen and len(segments) > 1:
        # chords of the convex requirement between consecutive grid points;
        # valid for every binary-feasible point because the requirement is
        # non-decreasing over the (checked) grid range
        for i in range(1, len(segments)):
            p0, p1 = segments[i - 1], segments[i]
            r0 = nadir_requirement(p0, freq, demand)
            r1 = nadir_requirement(p1, freq, demand)
            slope = (r1 - r0) / (p1 - p0)
            coeffs = dict(hr_expr.coeffs)
            coeffs[decisions.loss] = coeffs.get(decisions.loss, 0.0) - slope
            rows.append(LinearRow(
                coeffs=coeffs, sense=SENSE_GE,
                rhs=r0 - slope * p0 - hr_expr.constant,
                label=f"nadir_cut{tag}[{i}]",
            ))
    return rows
