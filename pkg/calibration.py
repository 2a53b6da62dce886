r"""
Calibrate matching efficiency to a target unemployment rate, and move
between equivalent (c, A) normalizations.

Given a target u*, the steady-state condition pins down the job-finding
probability f*, and the tightness equation is linear in 1/q once f* is
known, so the calibration is a closed-form chain:

    f* = s (1 - u*) / u*
    q* = c (r + s + phi f*) / ((1 - phi)(y - z))
    theta* = f* / q*
    A = q* / qbar(theta*)

with qbar the unit-efficiency fill probability. The equilibrium is then
re-solved with the calibrated technology as a check.
"""
import logging
from typing import *

from pydantic import BaseModel, root_validator, validator

import equilibrium
import matching

logger = logging.getLogger('dmp.calibration')
logger.setLevel(logging.INFO)

ROUND_TRIP_TOL = 1e-10

class InfeasibleTargetError(equilibrium.EquilibriumError):
    """Raise when a target unemployment rate needs a find probability above 1."""

class NormalizationRangeError(equilibrium.EquilibriumError):
    """Raise when a normalization scale would push the fill probability out of (0, 1)."""

def required_find_prob(s: float, target_u: float) -> float:
    r"""Invert u = s/(s + f): the find probability that yields target_u."""
    if not 0 < s < 1:
        raise matching.DomainError(f"separation probability must lie in (0, 1), got {s}")
    if not 0 < target_u < 1:
        raise matching.DomainError(f"target unemployment must lie in (0, 1), got {target_u}")
    f = s * (1 - target_u) / target_u
    if f > 1:
        raise InfeasibleTargetError(
            f"Target unemployment {target_u} needs a job-finding probability of {f:.6g} "
            f"per period with s={s}; shorten the model period or raise the target")
    return f

class CalibrationTarget(BaseModel):
    r"""
    An economy, a technology family with its shape fixed, and the
    unemployment rate its efficiency should produce.
    """
    target_u: float
    params: equilibrium.EconomyParams
    family: str
    shape: float

    class Config:
        allow_mutation = False
        extra = 'forbid'

    @validator('target_u')
    def unemployment_rate(cls, value):
        if not 0 < value < 1:
            raise ValueError(f"target_u must lie in (0, 1), got {value}")
        return value

    @validator('family')
    def known_family(cls, value):
        if value not in matching.FAMILIES:
            raise ValueError(f"unknown matching family {value!r}, expected one of {list(matching.FAMILIES)}")
        return value

    @root_validator(skip_on_failure=True)
    def feasible_target(cls, values):
        #InfeasibleTargetError is not a ValueError, so it escapes pydantic unwrapped
        required_find_prob(values['params'].s, values['target_u'])
        return values

    def technology(self, efficiency: float=1.0) -> matching.MatchingTechnology:
        return matching.make_technology(self.family, self.shape, efficiency)

class CalibrationResult(BaseModel):
    technology: matching.MatchingTechnology
    equilibrium: equilibrium.Equilibrium
    find: float
    fill: float
    theta: float

    class Config:
        allow_mutation = False

class Normalization(BaseModel):
    r"""A scale zeta for (c, A), valid on (0, 1/q*)."""
    zeta: float
    q_star: float

    class Config:
        allow_mutation = False

    @root_validator(skip_on_failure=True)
    def in_range(cls, values):
        zeta, q_star = values['zeta'], values['q_star']
        if not 0 < zeta < 1.0 / q_star:
            raise NormalizationRangeError(
                f"Normalization scale zeta={zeta} outside (0, {1.0 / q_star:.6g}); "
                f"the rescaled fill probability zeta*q*={zeta * q_star:.6g} must stay below 1")
        return values

    @property
    def bounds(self) -> Tuple[float, float]:
        return 0.0, 1.0 / self.q_star

def _chain(t: CalibrationTarget) -> Tuple[float, float, float]:
    p = t.params
    equilibrium.require_existence(p)
    f = required_find_prob(p.s, t.target_u)
    q = p.c * (p.r_plus_s + p.phi * f) / ((1 - p.phi) * p.fundamental_surplus)
    if not 0 < q <= 1:
        raise equilibrium.ProbabilityRangeError(
            f"Calibrated job-filling probability q*={q:.6g} is outside (0, 1] "
            f"(target u*={t.target_u}, c={p.c}); lower the vacancy cost or change the normalization",
            q=q, f=f,
        )
    return f, q, f / q

def calibrate_efficiency(t: CalibrationTarget) -> matching.MatchingTechnology:
    r"""The technology of the target's family whose efficiency yields target_u."""
    f, q, theta = _chain(t)
    unit = t.technology()
    efficiency = q / matching.unit_fill_prob(unit, theta)
    tech = unit.with_efficiency(efficiency)
    logger.info(f"Calibrated {tech.label()} for u*={t.target_u} at y={t.params.y}")
    return tech

def calibrate(t: CalibrationTarget, tol: float=equilibrium.DEFAULT_TOL) -> CalibrationResult:
    r"""
    Calibrate, re-solve the equilibrium with the result and check that it
    reproduces the target.
    """
    f, q, theta = _chain(t)
    tech = calibrate_efficiency(t)
    eq = equilibrium.solve_equilibrium(t.params, tech, tol)
    if abs(eq.u - t.target_u) > ROUND_TRIP_TOL:
        raise equilibrium.SolverError(
            f"Calibrated {tech.label()} gives u*={eq.u!r}, target was {t.target_u}")
    return CalibrationResult(technology=tech, equilibrium=eq, find=f, fill=q, theta=theta)

def normalization_bounds(eq: equilibrium.Equilibrium, zeta: float=1.0) -> Normalization:
    r"""Validate zeta against the fill probability of `eq`."""
    return Normalization(zeta=zeta, q_star=eq.q)

def renormalize(
        p: equilibrium.EconomyParams,
        tech: matching.MatchingTechnology,
        eq: equilibrium.Equilibrium,
        zeta: float
    ) -> Tuple[equilibrium.EconomyParams, matching.MatchingTechnology]:
    r"""
    Rescale the vacancy cost to zeta*c and choose the efficiency so that the
    new economy has tightness theta*/zeta with the same job-finding
    probability, the same J and the same unemployment:

        A_hat = zeta * A * qbar(theta*) / qbar(theta*/zeta)

    which is zeta^(1-alpha) A for Cobb-Douglas.

    Args:
        p: the economy solved in `eq`
        tech: its technology
        eq: the solved equilibrium
        zeta: scale in (0, 1/q*)

    Returns:
        (params, technology) of the renormalized economy; the inputs are untouched
    """
    normalization_bounds(eq, zeta)
    ratio = matching.unit_fill_prob(tech, eq.theta) / matching.unit_fill_prob(tech, eq.theta / zeta)
    new_tech = tech.with_efficiency(zeta * tech.efficiency * ratio)
    new_params = p.copy(update={'c': zeta * p.c})
    logger.debug(f"Renormalized with zeta={zeta}: c={new_params.c:.6g}, {new_tech.label()}")
    return new_params, new_tech
