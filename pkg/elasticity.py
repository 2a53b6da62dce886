r"""
Elasticity of market tightness with respect to productivity, split into two
factors:

    eta_theta_y = Upsilon * y / (y - z)

where y/(y - z) is the inverse of the fundamental surplus fraction and
Upsilon, bounded by 1 and 1/eta_{M,u}, carries everything the matching
technology and the bargaining weight contribute.
"""
import logging
from typing import *

import numpy as np
from pydantic import BaseModel

import equilibrium
import matching

logger = logging.getLogger('dmp.elasticity')
logger.setLevel(logging.INFO)

FD_REL_STEP = 1e-6

class ElasticityReport(BaseModel):
    eta_theta_y: float
    upsilon: float
    inverse_surplus_fraction: float
    eta_M_u: float
    upsilon_upper_bound: float
    eta_w_y: float
    dtheta_dy: float
    dw_dy: float
    r_plus_s: float
    at_equilibrium: bool = True

    class Config:
        allow_mutation = False

def upsilon_formula(r_plus_s, eta, phi_find):
    r"""
    1 + (r+s)(1-eta) / ((r+s) eta + phi_find), where phi_find stands for
    chi*phi*theta*q(theta). Works for any eta in (0, 1], including the
    limit eta = 1 where it equals 1.
    """
    return 1.0 + r_plus_s * (1.0 - eta) / (r_plus_s * eta + phi_find)

def dw_dy_formula(phi, r_plus_s, eta, find):
    r"""
    dw/dy = phi ((r+s) eta + f) / ((r+s) eta + phi f).
    Defined on the closed interval phi in [0, 1]; gives 0 at phi = 0 and 1 at
    phi = 1.
    """
    return phi * (r_plus_s * eta + find) / (r_plus_s * eta + phi * find)

def _parts(p, tech, theta):
    theta = float(matching.check_tightness(theta))
    eta = matching.match_elasticity(tech, theta)
    find = matching.find_prob(tech, theta)
    return theta, eta, find

def upsilon(p: equilibrium.EconomyParams, tech: matching.MatchingTechnology, theta) -> float:
    r"""The first factor of the tightness elasticity."""
    _, eta, find = _parts(p, tech, theta)
    return upsilon_formula(p.r_plus_s, eta, p.phi * find)

def upsilon_chi(
        p: equilibrium.EconomyParams,
        tech: matching.MatchingTechnology,
        theta,
        chi: float
    ) -> float:
    r"""
    Upsilon with the bargaining term scaled by chi in [0, 1]. Upsilon(1) is
    `upsilon`, Upsilon(0) is 1/eta_{M,u}, and it decreases in chi whenever
    phi*theta*q(theta) > 0.
    """
    if not 0 <= chi <= 1:
        raise matching.DomainError(f"chi must lie in [0, 1], got {chi}")
    _, eta, find = _parts(p, tech, theta)
    return upsilon_formula(p.r_plus_s, eta, chi * p.phi * find)

def tightness_derivative(p: equilibrium.EconomyParams, tech: matching.MatchingTechnology, theta) -> float:
    r"""dtheta/dy = (r + s + phi f) / ((r + s) eta + phi f) * theta / (y - z)."""
    theta, eta, find = _parts(p, tech, theta)
    rs = p.r_plus_s
    return (rs + p.phi * find) / (rs * eta + p.phi * find) * theta / p.fundamental_surplus

def wage_derivative(p: equilibrium.EconomyParams, tech: matching.MatchingTechnology, theta) -> float:
    _, eta, find = _parts(p, tech, theta)
    return dw_dy_formula(p.phi, p.r_plus_s, eta, find)

def wage_elasticity(p: equilibrium.EconomyParams, tech: matching.MatchingTechnology, theta) -> float:
    r"""eta_{w,y} = dw/dy * y / w, with w the bargained wage at theta."""
    w = equilibrium.wage_from_bargaining(p, theta)
    return wage_derivative(p, tech, theta) * p.y / w

def _is_equilibrium(p, tech, theta, tol):
    try:
        residual = equilibrium.tightness_residual(p, tech, theta)
    except matching.DomainError:
        return False
    #a few orders above the solver tolerance, since theta may have been serialized
    return abs(residual) <= 1e3 * tol * max(p.fundamental_surplus / p.c, 1.0)

def tightness_elasticity(
        p: equilibrium.EconomyParams,
        tech: matching.MatchingTechnology,
        theta,
        tol: float=equilibrium.DEFAULT_TOL,
    ) -> ElasticityReport:
    r"""
    Decompose eta_theta_y at theta. The closed forms hold at the equilibrium
    tightness; the report is still produced elsewhere but flagged with
    at_equilibrium=False.

    Args:
        p: the economy
        tech: its matching technology
        theta: tightness, normally the solved theta*
        tol: solver tolerance used to decide whether theta is an equilibrium
    """
    if p.fundamental_surplus <= 0:
        raise equilibrium.ExistenceError(
            f"Elasticities need y > z, got y={p.y}, z={p.z}")
    theta, eta, find = _parts(p, tech, theta)
    at_eq = _is_equilibrium(p, tech, theta, tol)
    if not at_eq:
        logger.warning(
            f"theta={theta:.6g} is not the equilibrium tightness of {tech.label()} at y={p.y}; "
            f"the decomposition is evaluated there anyway")

    ups = upsilon_formula(p.r_plus_s, eta, p.phi * find)
    inv_fraction = p.y / p.fundamental_surplus
    dtheta_dy = tightness_derivative(p, tech, theta)
    dw_dy = dw_dy_formula(p.phi, p.r_plus_s, eta, find)
    w = equilibrium.wage_from_bargaining(p, theta)

    return ElasticityReport(
        eta_theta_y=ups * inv_fraction,
        upsilon=ups,
        inverse_surplus_fraction=inv_fraction,
        eta_M_u=eta,
        upsilon_upper_bound=1.0 / eta,
        eta_w_y=dw_dy * p.y / w,
        dtheta_dy=dtheta_dy,
        dw_dy=dw_dy,
        r_plus_s=p.r_plus_s,
        at_equilibrium=at_eq,
    )

def equilibrium_elasticities(
        p: equilibrium.EconomyParams,
        tech: matching.MatchingTechnology,
        tol: float=equilibrium.DEFAULT_TOL,
    ) -> Tuple[equilibrium.Equilibrium, ElasticityReport]:
    r"""Solve the economy and decompose the elasticity at its theta*."""
    eq = equilibrium.solve_equilibrium(p, tech, tol)
    return eq, tightness_elasticity(p, tech, eq.theta, tol)

def finite_difference_elasticities(
        p: equilibrium.EconomyParams,
        tech: matching.MatchingTechnology,
        rel_step: float=FD_REL_STEP,
        tol: float=equilibrium.DEFAULT_TOL,
    ) -> Tuple[float, float]:
    r"""
    Central differences from two full re-solves at y(1 +- rel_step):
    returns (eta_theta_y, dw/dy). A numerical cross-check of the closed forms.
    """
    h = rel_step * p.y
    lo = equilibrium.solve_equilibrium(p.with_productivity(p.y - h), tech, tol)
    hi = equilibrium.solve_equilibrium(p.with_productivity(p.y + h), tech, tol)
    theta = equilibrium.solve_tightness(p, tech, tol)
    eta_theta_y = (hi.theta - lo.theta) / (2 * h) * p.y / theta
    dw_dy = (hi.w - lo.w) / (2 * h)
    return float(eta_theta_y), float(dw_dy)
