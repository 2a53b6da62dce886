r"""
Matching technologies M(u, v) with constant returns to scale.

Everything is written in terms of tightness theta = v/u: the fill
probability q(theta) = M/v, the find probability theta*q(theta) = M/u and the
elasticity of matching with respect to unemployment
eta(theta) = -theta*q'(theta)/q(theta). Each technology is a unit-efficiency
closed form scaled by a multiplicative efficiency constant.

The functions accept python floats or numpy arrays; scalars come back as
floats. Probabilities are not clamped to [0, 1] here, see
equilibrium.check_probabilities.
"""
import abc
import logging
from typing import *

import numpy as np
from pydantic import BaseModel, validator
from scipy.special import expit

logger = logging.getLogger('dmp.matching')
logger.setLevel(logging.INFO)

#standard shapes: Cobb-Douglas unemployment share and nonlinear curvature
DEFAULT_ALPHA = 0.5
DEFAULT_GAMMA = 1.27

class DomainError(ValueError):
    """Raise for arguments outside the domain of a model function."""

def as_result(arr):
    r"""Return 0-d results as plain floats, arrays as arrays."""
    arr = np.asarray(arr, dtype=float)
    if arr.ndim == 0:
        return float(arr)
    return arr

def check_tightness(theta, name='tightness') -> np.ndarray:
    r"""Return theta as a float array, or raise DomainError unless theta > 0."""
    arr = np.asarray(theta, dtype=float)
    if not np.all(arr > 0): #also catches nan
        raise DomainError(f"{name} must be positive, got {theta}")
    return arr

class MatchingTechnology(BaseModel, abc.ABC):
    r"""
    A constant returns to scale matching technology, described through its
    unit-efficiency fill probability and scaled by `efficiency` (A).
    """
    efficiency: float = 1.0

    family: ClassVar[str] = ''

    class Config:
        allow_mutation = False
        extra = 'forbid'

    @validator('efficiency')
    def positive_efficiency(cls, value):
        if not value > 0:
            raise ValueError(f"efficiency must be positive, got {value}")
        return value

    @abc.abstractmethod
    def log_unit_fill(self, theta: np.ndarray) -> np.ndarray:
        r"""log of the fill probability at unit efficiency."""

    @abc.abstractmethod
    def unit_fill_derivative(self, theta: np.ndarray) -> np.ndarray:
        r"""Derivative of the unit-efficiency fill probability."""

    @abc.abstractmethod
    def elasticity(self, theta: np.ndarray) -> np.ndarray:
        r"""eta_{M,u}(theta), which does not depend on efficiency."""

    @property
    @abc.abstractmethod
    def shape(self) -> float:
        r"""The curvature parameter (alpha or gamma)."""

    def with_efficiency(self, efficiency: float) -> 'MatchingTechnology':
        r"""Return the same technology with a different efficiency constant."""
        fields = self.dict()
        fields['efficiency'] = float(efficiency)
        return type(self)(**fields)

    def label(self) -> str:
        return f"{self.family}({self.shape:g}, efficiency={self.efficiency:.6g})"

class CobbDouglasSpec(MatchingTechnology):
    r"""M(u, v) = A u^alpha v^(1-alpha), so q = A theta^-alpha and eta = alpha."""
    alpha: float

    family: ClassVar[str] = 'cobb_douglas'

    @validator('alpha')
    def alpha_in_unit_interval(cls, value):
        if not 0 < value < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {value}")
        return value

    @property
    def shape(self) -> float:
        return self.alpha

    def log_unit_fill(self, theta):
        return -self.alpha * np.log(theta)

    def unit_fill_derivative(self, theta):
        return -self.alpha * np.power(theta, -self.alpha - 1.0)

    def elasticity(self, theta):
        return np.full_like(np.asarray(theta, dtype=float), self.alpha)

class NonlinearSpec(MatchingTechnology):
    r"""
    M(u, v) = A uv / (u^gamma + v^gamma)^(1/gamma), so
    q = A (1 + theta^gamma)^(-1/gamma) and eta = theta^gamma / (1 + theta^gamma).

    log(1 + theta^gamma) is always taken as logaddexp(0, gamma*log(theta)),
    which stays finite where theta^gamma itself would overflow.
    """
    gamma: float

    family: ClassVar[str] = 'nonlinear'

    @validator('gamma')
    def positive_gamma(cls, value):
        if not value > 0:
            raise ValueError(f"gamma must be positive, got {value}")
        return value

    @property
    def shape(self) -> float:
        return self.gamma

    def _log1p_theta_gamma(self, theta):
        return np.logaddexp(0.0, self.gamma * np.log(theta))

    def log_unit_fill(self, theta):
        return -self._log1p_theta_gamma(theta) / self.gamma

    def unit_fill_derivative(self, theta):
        #-theta^(gamma-1) (1 + theta^gamma)^(-1/gamma - 1)
        log_theta = np.log(theta)
        return -np.exp(
            (self.gamma - 1.0) * log_theta
            - (1.0 / self.gamma + 1.0) * self._log1p_theta_gamma(theta)
        )

    def elasticity(self, theta):
        return expit(self.gamma * np.log(theta))

FAMILIES = {
    CobbDouglasSpec.family: (CobbDouglasSpec, 'alpha'),
    NonlinearSpec.family: (NonlinearSpec, 'gamma'),
}

def make_technology(family: str, shape: float, efficiency: float=1.0) -> MatchingTechnology:
    r"""Build a technology from its family name and shape parameter."""
    if family not in FAMILIES:
        raise DomainError(f"Unknown matching family {family!r}, expected one of {list(FAMILIES)}")
    cls, shape_name = FAMILIES[family]
    return cls(**{shape_name: shape, 'efficiency': efficiency})

def matches(tech: MatchingTechnology, u, v):
    r"""
    Number of matches M(u, v). Zero when either side of the market is empty,
    which is the limit of both closed forms.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(u < 0) or np.any(v < 0) or np.any(np.isnan(u)) or np.any(np.isnan(v)):
        raise DomainError(f"unemployment and vacancies must be nonnegative, got u={u}, v={v}")
    u, v = np.broadcast_arrays(u, v)
    out = np.zeros(u.shape, dtype=float)
    interior = (u > 0) & (v > 0)
    if np.any(interior):
        ui = u[interior]
        out[interior] = ui * find_prob(tech, v[interior] / ui)
    return as_result(out)

def unit_fill_prob(tech: MatchingTechnology, theta):
    r"""q(theta) at unit efficiency."""
    theta = check_tightness(theta)
    return as_result(np.exp(tech.log_unit_fill(theta)))

def fill_prob(tech: MatchingTechnology, theta):
    r"""Probability that a vacancy is filled in a period, q(theta) = M/v."""
    theta = check_tightness(theta)
    return as_result(tech.efficiency * np.exp(tech.log_unit_fill(theta)))

def find_prob(tech: MatchingTechnology, theta):
    r"""Probability that an unemployed worker finds a job, theta*q(theta) = M/u."""
    theta = check_tightness(theta)
    return as_result(theta * fill_prob(tech, theta))

def fill_prob_derivative(tech: MatchingTechnology, theta):
    r"""Analytic q'(theta); always negative."""
    theta = check_tightness(theta)
    return as_result(tech.efficiency * tech.unit_fill_derivative(theta))

def match_elasticity(tech: MatchingTechnology, theta):
    r"""eta_{M,u}(theta) = -theta q'(theta) / q(theta), in (0, 1)."""
    theta = check_tightness(theta)
    return as_result(tech.elasticity(theta))

def elasticity_bound(tech: MatchingTechnology, theta):
    r"""1 / eta_{M,u}(theta), the upper bound on the first elasticity factor."""
    return as_result(1.0 / np.asarray(match_elasticity(tech, theta)))
