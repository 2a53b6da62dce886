r"""
Steady-state equilibrium of the canonical DMP model in discrete time.

Free entry (V = 0), Nash bargaining over the match surplus and the
steady-state unemployment rate reduce the Bellman equations

    J = y - w + beta [s V + (1 - s) J]
    V = -c + beta {q J + (1 - q) V}
    E = w + beta [s U + (1 - s) E]
    U = z + beta {f E + (1 - f) U}

to one equation in tightness,

    y - z = c (r + s + phi theta q(theta)) / ((1 - phi) q(theta)),

whose unique root is bracketed by (0, (1 - phi)(y - z) / (phi c)) whenever
the first vacancy is worth posting, (1 - phi)(y - z) / (r + s) > c.
"""
import logging
import math
from typing import *

import numpy as np
from pydantic import BaseModel, root_validator, validator
from scipy import optimize

import matching

logger = logging.getLogger('dmp.equilibrium')
logger.setLevel(logging.INFO)

DEFAULT_TOL = 1e-12
INVARIANT_TOL = 1e-9
MAX_TIGHTNESS = 1e12
#the lower end of the bracket is searched on hi * 10^-k for k in 1..LOWER_DECADES
LOWER_DECADES = 40

class EquilibriumError(Exception):
    """Raise when an economy has no (valid) steady-state equilibrium."""

class ExistenceError(EquilibriumError):
    """Raise when the value of an initial vacancy is not positive."""

class BracketError(EquilibriumError):
    """Raise when the tightness residual never changes sign."""

class SolverError(EquilibriumError):
    """Raise when a solved equilibrium fails its own identities."""

class ProbabilityRangeError(EquilibriumError):
    """Raise when per-period fill or find probabilities leave (0, 1]."""

    def __init__(self, message, q=None, f=None):
        super().__init__(message, q, f)
        self.message = message
        self.q = q
        self.f = f

    def __str__(self):
        return self.message

class EconomyParams(BaseModel):
    r"""
    One economy: output y, value of nonwork z, vacancy cost c, worker
    bargaining power phi, separation probability s and the per-period
    interest rate r (with beta = 1/(1+r)). Give r or beta; the other is
    derived.
    """
    y: float
    z: float
    c: float
    phi: float
    s: float
    r: Optional[float] = None
    beta: Optional[float] = None

    class Config:
        allow_mutation = False
        extra = 'forbid'

    @validator('y', 'z')
    def nonnegative(cls, value, field):
        if not value >= 0:
            raise ValueError(f"{field.name} must be nonnegative, got {value}")
        return value

    @validator('c')
    def positive_cost(cls, value):
        if not value > 0:
            raise ValueError(f"vacancy cost c must be positive, got {value}")
        return value

    @validator('phi')
    def bargaining_power(cls, value):
        if not 0 <= value < 1:
            raise ValueError(f"bargaining power phi must lie in [0, 1), got {value}")
        return value

    @validator('s')
    def separation_probability(cls, value):
        if not 0 < value < 1:
            raise ValueError(f"separation probability s must lie in (0, 1), got {value}")
        return value

    @root_validator(skip_on_failure=True)
    def discounting(cls, values):
        r, beta = values.get('r'), values.get('beta')
        if r is None and beta is None:
            raise ValueError("one of r or beta is required")
        if r is not None and not r > 0:
            raise ValueError(f"interest rate r must be positive, got {r}")
        if beta is not None and not 0 < beta < 1:
            raise ValueError(f"discount factor beta must lie in (0, 1), got {beta}")
        if r is None:
            r = 1.0 / beta - 1.0
        elif beta is None:
            beta = 1.0 / (1.0 + r)
        elif abs(beta - 1.0 / (1.0 + r)) > 1e-12:
            raise ValueError(f"r={r} and beta={beta} disagree; give only one of them")
        values['r'], values['beta'] = r, beta
        return values

    @property
    def r_plus_s(self) -> float:
        return self.r + self.s

    @property
    def fundamental_surplus(self) -> float:
        return self.y - self.z

    def with_productivity(self, y: float) -> 'EconomyParams':
        r"""The same economy at another productivity level."""
        return self.copy(update={'y': float(y)})

class ExistenceReport(BaseModel):
    surplus_condition_holds: bool
    initial_vacancy_value: float
    bracket: Tuple[float, float]

class Equilibrium(BaseModel):
    r"""A solved steady state: tightness, unemployment, wage, probabilities and asset values."""
    theta: float
    u: float
    w: float
    q: float
    f: float
    J: float
    V: float
    E: float
    U: float
    S: float
    annuity_U: float

    class Config:
        allow_mutation = False

def check_existence(p: EconomyParams) -> ExistenceReport:
    r"""
    Check that the first vacancy is worth posting, i.e. that
    (1 - phi)(y - z) / (r + s) > c, and report the limit value of that
    vacancy together with the interval that contains equilibrium tightness.
    """
    surplus = p.fundamental_surplus
    holds = surplus > 0 and (1 - p.phi) * surplus / p.r_plus_s > p.c
    initial_value = -p.c + p.beta * (1 - p.phi) * surplus / (1 - p.beta * (1 - p.s))
    if p.phi == 0:
        upper = math.inf
    else:
        upper = (1 - p.phi) * surplus / (p.phi * p.c)
    return ExistenceReport(
        surplus_condition_holds=holds,
        initial_vacancy_value=initial_value,
        bracket=(0.0, upper),
    )

def require_existence(p: EconomyParams) -> ExistenceReport:
    report = check_existence(p)
    if not report.surplus_condition_holds:
        raise ExistenceError(
            f"No equilibrium: the initial vacancy is not profitable "
            f"(value of an initial vacancy {report.initial_vacancy_value:.6g} <= 0; "
            f"need (1-phi)(y-z)/(r+s) > c with y={p.y}, z={p.z}, c={p.c}, phi={p.phi}, "
            f"r+s={p.r_plus_s:.6g})"
        )
    return report

def tightness_residual(p: EconomyParams, tech: matching.MatchingTechnology, theta):
    r"""
    (y - z)/c - (r + s + phi theta q) / ((1 - phi) q); continuous and strictly
    decreasing in theta, zero at equilibrium.
    """
    theta = matching.check_tightness(theta)
    q = np.asarray(matching.fill_prob(tech, theta))
    residual = p.fundamental_surplus / p.c - (p.r_plus_s + p.phi * theta * q) / ((1 - p.phi) * q)
    return matching.as_result(residual)

def tightness_bracket(p: EconomyParams, tech: matching.MatchingTechnology) -> Tuple[float, float]:
    r"""
    Return (lo, hi) with residual(lo) > 0 > residual(hi). The upper end is
    the analytic bound; with phi = 0 it is found by doubling from 1.
    """
    report = require_existence(p)
    hi = report.bracket[1]
    if math.isinf(hi):
        hi = 1.0
        while tightness_residual(p, tech, hi) >= 0:
            hi *= 2.0
            if hi > MAX_TIGHTNESS:
                raise BracketError(
                    f"Tightness residual still positive at theta={MAX_TIGHTNESS:g} "
                    f"for {tech.label()}")

    lo = hi
    for _ in range(LOWER_DECADES):
        lo = lo / 10.0
        if tightness_residual(p, tech, lo) > 0:
            break
    else:
        raise BracketError(
            f"Tightness residual is negative down to theta={lo:.3g} for {tech.label()}: "
            f"matching efficiency too low for any vacancy to be filled profitably")
    logger.debug(f"Bracket for {tech.label()}: ({lo:.6g}, {hi:.6g})")
    return lo, hi

def solve_tightness(
        p: EconomyParams,
        tech: matching.MatchingTechnology,
        tol: float=DEFAULT_TOL,
    ) -> float:
    r"""
    Root-find equilibrium tightness with Brent's method on the analytic
    bracket (bisection if Brent does not converge). The result satisfies
    |residual| <= tol * (y - z) / c.
    """
    if not tol > 0:
        raise matching.DomainError(f"tolerance must be positive, got {tol}")
    lo, hi = tightness_bracket(p, tech)
    func = lambda theta: tightness_residual(p, tech, theta)

    xtol = np.finfo(float).tiny
    rtol = 4 * np.finfo(float).eps
    theta, result = optimize.brentq(
        func, lo, hi, xtol=xtol, rtol=rtol, maxiter=500, full_output=True, disp=False)
    if not result.converged:
        logger.warning(f"Brent did not converge ({result.flag}); falling back to bisection")
        theta, result = optimize.bisect(
            func, lo, hi, xtol=xtol, rtol=rtol, maxiter=2000, full_output=True, disp=False)
    logger.debug(f"theta*={theta:.17g} after {result.iterations} iterations")

    residual = func(theta)
    if abs(residual) > tol * p.fundamental_surplus / p.c:
        raise SolverError(
            f"Tightness residual {residual:.3g} above tolerance at theta={theta:.17g}")
    return float(theta)

def steady_state_unemployment(s, f):
    r"""u = s / (s + f), the rate at which inflows and outflows balance."""
    s = np.asarray(s, dtype=float)
    f = np.asarray(f, dtype=float)
    if not np.all((s > 0) & (s < 1)):
        raise matching.DomainError(f"separation probability must lie in (0, 1), got {s}")
    if not np.all((f > 0) & (f <= 1)):
        raise matching.DomainError(f"job-finding probability must lie in (0, 1], got {f}")
    return matching.as_result(s / (s + f))

def law_of_motion(u, s, f):
    r"""Next-period unemployment u + s(1 - u) - f u."""
    u = np.asarray(u, dtype=float)
    if not np.all((u >= 0) & (u <= 1)):
        raise matching.DomainError(f"unemployment rate must lie in [0, 1], got {u}")
    return matching.as_result(u + s * (1 - u) - f * u)

def wage_from_free_entry(p: EconomyParams, tech: matching.MatchingTechnology, theta):
    r"""w = y - (r + s) c / q(theta), the wage at which V = 0."""
    q = np.asarray(matching.fill_prob(tech, theta))
    return matching.as_result(p.y - p.r_plus_s * p.c / q)

def wage_from_bargaining(p: EconomyParams, theta):
    r"""The Nash wage w = z + phi (y - z + theta c)."""
    theta = np.asarray(theta, dtype=float)
    if not np.all(theta >= 0):
        raise matching.DomainError(f"tightness must be nonnegative, got {theta}")
    return matching.as_result(p.z + p.phi * (p.fundamental_surplus + theta * p.c))

def annuity_value(p: EconomyParams, theta):
    r"""rU/(1+r) = z + phi c theta / (1 - phi)."""
    theta = np.asarray(theta, dtype=float)
    return matching.as_result(p.z + p.phi * p.c * theta / (1 - p.phi))

def wage_from_annuity(p: EconomyParams, annuity_U):
    r"""w = a + phi (y - a), where a = rU/(1+r) is the annuity value of unemployment."""
    return p.phi * p.y + (1 - p.phi) * annuity_U

def check_probabilities(q: float, f: float):
    if not (0 < q <= 1 and 0 < f <= 1):
        raise ProbabilityRangeError(
            f"Per-period probabilities outside (0, 1]: job-filling q={q:.6g}, "
            f"job-finding f={f:.6g}; use a shorter model period or another efficiency",
            q=q, f=f,
        )

def bellman_residuals(
        p: EconomyParams,
        tech: matching.MatchingTechnology,
        eq: Equilibrium
    ) -> Dict[str, float]:
    r"""Left-hand side minus right-hand side of each Bellman equation."""
    b, s, q, f = p.beta, p.s, eq.q, eq.f
    return {
        'J': eq.J - (p.y - eq.w + b * (s * eq.V + (1 - s) * eq.J)),
        'V': eq.V - (-p.c + b * (q * eq.J + (1 - q) * eq.V)),
        'E': eq.E - (eq.w + b * (s * eq.U + (1 - s) * eq.E)),
        'U': eq.U - (p.z + b * (f * eq.E + (1 - f) * eq.U)),
    }

def _check_invariants(p, tech, eq, tol):
    atol = INVARIANT_TOL * max(1.0, tol / DEFAULT_TOL)

    def close(name, a, b, scale=1.0):
        if abs(a - b) > atol * max(1.0, abs(scale)):
            raise SolverError(f"{name} violated at theta={eq.theta:.17g}: {a!r} != {b!r}")

    close('free entry', eq.J, p.c / (p.beta * eq.q), eq.J)
    close('worker share', eq.E - eq.U, p.phi * eq.S)
    close('firm share', eq.J - eq.V, (1 - p.phi) * eq.S)
    close('steady-state unemployment', eq.u, p.s / (p.s + eq.f))
    close('annuity value', p.r * eq.U / (1 + p.r), annuity_value(p, eq.theta), eq.annuity_U)
    close('free-entry wage', wage_from_free_entry(p, tech, eq.theta), eq.w)
    close('annuity wage', wage_from_annuity(p, eq.annuity_U), eq.w)
    for name, residual in bellman_residuals(p, tech, eq).items():
        scale = {'J': eq.J, 'V': eq.J, 'E': eq.E, 'U': eq.U}[name]
        close(f'Bellman equation for {name}', residual, 0.0, scale)

def solve_equilibrium(
        p: EconomyParams,
        tech: matching.MatchingTechnology,
        tol: float=DEFAULT_TOL,
    ) -> Equilibrium:
    r"""
    Solve for tightness and assemble the steady state. The value of
    unemployment comes from its annuity identity; the Bellman equations are
    then checked rather than solved.
    """
    theta = solve_tightness(p, tech, tol)
    q = matching.fill_prob(tech, theta)
    f = theta * q
    check_probabilities(q, f)

    u = steady_state_unemployment(p.s, f)
    w = wage_from_bargaining(p, theta)
    J = (p.y - w) / (1 - p.beta * (1 - p.s))
    S = J / (1 - p.phi)
    annuity_U = annuity_value(p, theta)
    U = (1 + p.r) / p.r * annuity_U
    E = U + p.phi * S

    eq = Equilibrium(
        theta=theta, u=u, w=w, q=q, f=f,
        J=J, V=0.0, E=E, U=U, S=S, annuity_U=annuity_U,
    )
    _check_invariants(p, tech, eq, tol)
    logger.debug(f"Solved {tech.label()} at y={p.y}: theta={theta:.6g}, u={u:.6g}, w={w:.6g}")
    return eq
