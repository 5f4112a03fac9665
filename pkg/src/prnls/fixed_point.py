"""Contraction construction of solitary waves near the non-relativistic limit.

Writing u_c = u_inf + w, the reduced equation P_c(D) u = sign(u)|u|^p becomes
the fixed-point problem

    w = Phi_c(w) = R_c + L^{-1} Q(w),
    R_c  = L^{-1} (P_inf(D) - P_c(D)) u_inf,
    Q(w) = |u_inf + w|^{p-1} (u_inf + w) - u_inf^p - p u_inf^{p-1} w,

with L the linearized operator around u_inf at speed c. For large c the map
is a contraction on a ball whose radius tracks ||R_c|| (order c^-2 for p > 2
and at worst c^-1 for p <= 2), and plain Picard iteration from w = 0
converges geometrically. For small c or supercritical p the same iteration is
run in probe mode, where collapse, divergence and loss of invertibility are
recorded as data rather than raised.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (CollapseError, ContractionError, ConvergenceError, StagnationError)
from .ground_state import GroundState, solve_limit_equation
from .linsolve import LinearizedOperator, invert, linearized_operator
from .params import ReducedParams
from .spectral import (Field, Grid, half_spectrum_apply, half_spectrum_multiplier,
                       intersection_norm, norm_h1, norm_lq, random_band_limited,
                       signed_power, symmetrize_radial)
from .symbols import p_infty_minus_p_c

_C_FLOOR = 2.0
_COLLAPSE_FLOOR = 1e-10

OUTCOME_CONVERGED = "converged"
OUTCOME_COLLAPSED = "collapsed"
OUTCOME_DIVERGED = "diverged"
OUTCOME_STALLED = "stalled"


@dataclass(frozen=True)
class SolveReport:
    """Per-run record of the contraction iteration."""

    n: int
    p: float
    c: float
    outcome: str
    converged: bool
    iterations: int
    contraction_estimate: float
    final_residual: float
    rc_norm: float
    w_norm: float
    gs_residual: float
    w_norms: tuple = ()
    steps: tuple = ()
    message: str = ""


def remainder_rc(op: LinearizedOperator, tol_lin: float = 1e-10) -> Field:
    """First-order correction R_c = L^{-1} (P_inf(D) - P_c(D)) u_inf."""
    grid = op.grid
    mult = half_spectrum_multiplier(grid, p_infty_minus_p_c(op.c))
    rhs = Field(grid, half_spectrum_apply(grid, op.gs.u.values, mult))
    return invert(op, symmetrize_radial(rhs), tol=tol_lin)


def nonlinear_q(gs: GroundState, w: Field) -> Field:
    """Superlinear remainder Q(w) of the nonlinearity around the ground state."""
    u = gs.u.values
    p = gs.p
    up = np.maximum(u, 0.0)
    return Field(w.grid, signed_power(u + w.values, p) - up ** p - p * up ** (p - 1.0) * w.values)


def phi(op: LinearizedOperator, w: Field, rc: Field = None,
        tol_lin: float = 1e-10) -> Field:
    """One application of the contraction map Phi_c(w) = R_c + L^{-1} Q(w)."""
    if rc is None:
        rc = remainder_rc(op, tol_lin)
    correction = invert(op, symmetrize_radial(nonlinear_q(op.gs, w)), tol=tol_lin)
    return symmetrize_radial(rc + correction)


def random_start(grid: Grid, rng: np.random.Generator, scale: float, q: float,
                 kmax: float = 4.0) -> Field:
    """Random radial perturbation with intersection norm equal to scale."""
    f = random_band_limited(grid, rng, kmax, symmetric=True)
    size = intersection_norm(f, q)
    return f * (scale / size) if size > 0 else f


def _contraction_estimate(steps, floor: float) -> float:
    ratios = [steps[k] / steps[k - 1] for k in range(1, len(steps)) if steps[k - 1] > floor]
    return max(ratios) if ratios else 0.0


def solve(rp: ReducedParams, grid: Grid, gs: GroundState = None, w0: Field = None,
          probe: bool = False, tol_gs: float = 1e-12, tol_lin: float = 1e-10,
          tol_step: float = 1e-10, tol_residual: float = 1e-8, max_iter: int = 200,
          gs_max_iter: int = 2000):
    """Construct the solitary wave u_c = u_inf + w; returns (u_c, SolveReport).

    Normal mode requires a construction-subcritical exponent and c >= 2, and
    raises typed errors (ContractionError on divergence, CollapseError on
    decay to zero, ConvergenceError on a stall) each carrying the partial
    report. Probe mode lifts the preconditions and never raises for
    mathematical outcomes: the returned report classifies the run as
    converged / collapsed / diverged / stalled, and u_c is None for
    unconverged probe runs.
    """
    if grid.n != rp.n:
        raise ValueError(f"grid dimension {grid.n} does not match parameters (n={rp.n})")
    if not probe:
        if not rp.subcritical_for_construction:
            raise ValueError(
                f"p={rp.p} at n={rp.n} is not subcritical for construction; "
                "probe=True runs the same iteration as a probe")
        if rp.c_tilde < _C_FLOOR:
            raise ValueError(f"c={rp.c_tilde} below the construction floor {_C_FLOOR}; "
                             "probe=True lifts the floor")

    def _report(outcome, iterations, kappa, residual, rcn, wn, gres, wns, sts, msg=""):
        return SolveReport(rp.n, rp.p, rp.c_tilde, outcome, outcome == OUTCOME_CONVERGED,
                           iterations, kappa, residual, rcn, wn, gres,
                           tuple(wns), tuple(sts), msg)

    q = rp.q_default
    if gs is None:
        try:
            gs = solve_limit_equation(rp, grid, tol=tol_gs, max_iter=gs_max_iter,
                                      allow_supercritical=probe)
        except CollapseError as exc:
            if probe:
                return None, _report(OUTCOME_COLLAPSED, 0, 0.0, np.nan, np.nan, np.nan,
                                     np.nan, (), (), f"limit ground state: {exc}")
            raise
        except ConvergenceError as exc:
            if probe:
                return None, _report(OUTCOME_DIVERGED, 0, 0.0, np.nan, np.nan, np.nan,
                                     np.nan, (), (), f"limit ground state: {exc}")
            raise
    elif gs.p != rp.p or gs.grid != grid:
        raise ValueError("supplied ground state does not match parameters/grid")

    op = linearized_operator(rp, gs)
    ceiling = norm_h1(gs.u)
    pc_half = op.pc_half

    def equation_residual(u_values):
        pcu = half_spectrum_apply(grid, u_values, pc_half)
        return norm_lq(Field(grid, pcu - signed_power(u_values, rp.p)), 2)

    try:
        rc = remainder_rc(op, tol_lin)
    except (StagnationError, ConvergenceError) as exc:
        if probe:
            return None, _report(OUTCOME_DIVERGED, 0, 0.0, np.nan, np.nan, np.nan,
                                 gs.residual, (), (),
                                 f"linearized operator lost invertibility: {exc}")
        raise
    rc_norm = intersection_norm(rc, q)

    w = w0 if w0 is not None else Field.zeros(grid)
    w_norms = []
    steps = []
    step_floor = max(10.0 * tol_step, 1e-14 * max(ceiling, 1.0))

    for k in range(1, max_iter + 1):
        try:
            correction = invert(op, symmetrize_radial(nonlinear_q(gs, w)), tol=tol_lin)
        except (StagnationError, ConvergenceError) as exc:
            msg = f"linearized solve failed at iteration {k}: {exc}"
            report = _report(OUTCOME_DIVERGED, k, _contraction_estimate(steps, step_floor),
                             np.nan, rc_norm, intersection_norm(w, q), gs.residual,
                             w_norms, steps, msg)
            if probe:
                return None, report
            raise ContractionError(msg, report) from exc
        w_new = symmetrize_radial(rc + correction)

        steps.append(intersection_norm(w_new - w, q))
        wn = intersection_norm(w_new, q)
        w_norms.append(wn)
        w = w_new
        kappa = _contraction_estimate(steps, step_floor)

        u_amp = float(np.max(np.abs(gs.u.values + w.values)))
        if u_amp < _COLLAPSE_FLOOR:
            report = _report(OUTCOME_COLLAPSED, k, kappa, np.nan, rc_norm, wn,
                             gs.residual, w_norms, steps, "iterate collapsed to zero")
            if probe:
                return None, report
            raise CollapseError("contraction iterate collapsed to zero", report)
        if not np.isfinite(wn) or wn > ceiling:
            report = _report(OUTCOME_DIVERGED, k, kappa, np.nan, rc_norm, wn,
                             gs.residual, w_norms, steps,
                             f"||w||={wn:.3e} left the contraction ball (ceiling {ceiling:.3e})")
            if probe:
                return None, report
            raise ContractionError(report.message, report)

        if steps[-1] < tol_step:
            u_c = Field(grid, gs.u.values + w.values)
            residual = equation_residual(u_c.values)
            if residual <= tol_residual:
                return u_c, _report(OUTCOME_CONVERGED, k, kappa, residual, rc_norm, wn,
                                    gs.residual, w_norms, steps)
            report = _report(OUTCOME_STALLED, k, kappa, residual, rc_norm, wn,
                             gs.residual, w_norms, steps,
                             f"step tolerance met but residual {residual:.3e} > "
                             f"tol_residual {tol_residual:g}")
            if probe:
                return None, report
            raise ConvergenceError(report.message, report)

    report = _report(OUTCOME_STALLED, max_iter, _contraction_estimate(steps, step_floor),
                     np.nan, rc_norm, intersection_norm(w, q), gs.residual, w_norms, steps,
                     f"no convergence within {max_iter} iterations")
    if probe:
        return None, report
    raise ConvergenceError(report.message, report)


@dataclass(frozen=True)
class ThresholdReport:
    """Bisection bracket for the smallest c at which the contraction converges."""

    c_diverged: float
    c_converged: float
    history: tuple


def find_convergence_threshold(rp_template: ReducedParams, grid: Grid, c_lo: float,
                               c_hi: float, rounds: int = 8, gs: GroundState = None,
                               **solve_kwargs) -> ThresholdReport:
    """Bisect [c_lo, c_hi] for the empirical convergence threshold of solve().

    c_lo must fail and c_hi must converge (checked); each probe run reuses the
    supplied ground state. Returns the final bracket and the probe history.
    """
    if gs is None:
        gs = solve_limit_equation(ReducedParams(rp_template.n, rp_template.p, c_hi), grid,
                                  tol=solve_kwargs.get("tol_gs", 1e-12))
    history = []

    def outcome_at(c):
        rp = ReducedParams(rp_template.n, rp_template.p, c)
        _, rep = solve(rp, grid, gs=gs, probe=True, **solve_kwargs)
        history.append((c, rep.outcome))
        return rep.converged

    if outcome_at(c_lo):
        raise ValueError(f"bisection needs a failing lower endpoint; c={c_lo} converged")
    if not outcome_at(c_hi):
        raise ValueError(f"bisection needs a converging upper endpoint; c={c_hi} did not")
    lo, hi = c_lo, c_hi
    for _ in range(rounds):
        mid = 0.5 * (lo + hi)
        if outcome_at(mid):
            hi = mid
        else:
            lo = mid
    return ThresholdReport(lo, hi, tuple(history))
