r"""
Productivity perturbation experiments.

Each economy has its matching efficiency calibrated once at its base
productivity; productivity is then moved along a grid with every other
parameter (efficiency included) held fixed, and the steady state is solved
at each grid point. Results are plot data: one CSV row per (economy, y).
"""
import logging
from typing import *
from typing import IO

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from pydantic import BaseModel, root_validator, validator
from tqdm import tqdm

import calibration
import elasticity
import equilibrium
import matching
import utils

logger = logging.getLogger('dmp.experiment')
logger.setLevel(logging.INFO)

DAYS_PER_MONTH = 30
DEFAULT_POINTS = 11
DEFAULT_HALF_WIDTH = 0.005
REPLICATION_YS = (0.61, 0.63, 0.65)

CSV_COLUMNS = [
    'economy', 'family', 'y', 'theta', 'u', 'w',
    'q_daily', 'f_daily', 'q_monthly', 'f_monthly',
    'upsilon', 'eta_theta_y', 'eta_w_y', 'eta_M_u',
]

class SweepRowError(equilibrium.EquilibriumError):
    """Raise when one grid point of a sweep cannot be solved."""

    def __init__(self, message, economy=None, y=None):
        super().__init__(message, economy, y)
        self.message = message
        self.economy = economy
        self.y = y

    def __str__(self):
        return self.message

def monthly_rate(daily_p, days: int=DAYS_PER_MONTH):
    r"""
    1 - (1 - p)^days: the probability of at least one success in `days`
    independent daily draws.
    """
    if isinstance(days, bool) or not isinstance(days, (int, np.integer)) or days < 1:
        raise matching.DomainError(f"days must be a positive integer, got {days!r}")
    p = np.asarray(daily_p, dtype=float)
    if not np.all((p >= 0) & (p <= 1)):
        raise matching.DomainError(f"daily probability must lie in [0, 1], got {daily_p}")
    with np.errstate(divide='ignore'):
        monthly = -np.expm1(days * np.log1p(-p))
    monthly = np.where(p == 1, 1.0, monthly)
    return matching.as_result(monthly)

def perturbation_grid(
        base_y: float,
        y_min: Optional[float]=None,
        y_max: Optional[float]=None,
        points: int=DEFAULT_POINTS,
        half_width: float=DEFAULT_HALF_WIDTH,
    ) -> List[float]:
    r"""
    Evenly spaced productivity levels around base_y. The grid always
    contains base_y itself: the nearest point is moved onto it, or it is
    added when it lies outside [y_min, y_max].
    """
    if points < 1:
        raise matching.DomainError(f"points must be at least 1, got {points}")
    if points == 1:
        return [float(base_y)]
    lo = base_y - half_width if y_min is None else y_min
    hi = base_y + half_width if y_max is None else y_max
    if not lo < hi:
        raise matching.DomainError(f"empty productivity range [{lo}, {hi}]")
    grid = np.linspace(lo, hi, points)
    if lo <= base_y <= hi:
        grid[np.argmin(np.abs(grid - base_y))] = base_y
    else:
        grid = np.append(grid, base_y)
    return sorted(set(float(y) for y in grid))

class SweepSpec(BaseModel):
    r"""
    One economy of an experiment: its parameters at base productivity, its
    technology family and shape, how to obtain the efficiency (calibrate to
    target_u, or take `efficiency` as given) and the productivity grid.
    """
    economy: str
    params: equilibrium.EconomyParams
    family: str
    shape: float
    target_u: Optional[float] = None
    efficiency: Optional[float] = None
    grid: List[float]

    class Config:
        allow_mutation = False
        extra = 'forbid'

    @validator('family')
    def known_family(cls, value):
        if value not in matching.FAMILIES:
            raise ValueError(f"unknown matching family {value!r}, expected one of {list(matching.FAMILIES)}")
        return value

    @root_validator(skip_on_failure=True)
    def grid_and_efficiency(cls, values):
        p, grid = values['params'], values['grid']
        if values.get('target_u') is None and values.get('efficiency') is None:
            raise ValueError("either target_u (to calibrate) or efficiency is required")
        if p.y not in grid:
            raise ValueError(f"grid must contain the base productivity y={p.y}")
        bad = [y for y in grid if not y > p.z]
        if bad:
            raise ValueError(f"every grid productivity must exceed z={p.z}, got {bad}")
        values['grid'] = sorted(grid)
        return values

class SweepRow(BaseModel):
    economy: str
    family: str
    y: float
    theta: float
    u: float
    w: float
    q_daily: float
    f_daily: float
    q_monthly: float
    f_monthly: float
    upsilon: float
    eta_theta_y: float
    eta_w_y: float
    eta_M_u: float

    class Config:
        allow_mutation = False

    @validator('q_daily', 'f_daily', 'q_monthly', 'f_monthly')
    def probability(cls, value, field):
        if not 0 < value <= 1:
            raise ValueError(f"{field.name} must lie in (0, 1], got {value}")
        return value

    @validator('u')
    def unemployment_rate(cls, value):
        if not 0 < value < 1:
            raise ValueError(f"u must lie in (0, 1), got {value}")
        return value

def resolve_technology(spec: SweepSpec, tol: float=equilibrium.DEFAULT_TOL) -> matching.MatchingTechnology:
    r"""The sweep's technology, calibrated at base productivity when target_u is set."""
    if spec.target_u is not None:
        target = calibration.CalibrationTarget(
            target_u=spec.target_u, params=spec.params, family=spec.family, shape=spec.shape)
        return calibration.calibrate(target, tol).technology
    return matching.make_technology(spec.family, spec.shape, spec.efficiency)

def solve_row(
        economy: str,
        p: equilibrium.EconomyParams,
        tech: matching.MatchingTechnology,
        tol: float=equilibrium.DEFAULT_TOL,
    ) -> SweepRow:
    r"""Solve one economy at its own productivity and collect a CSV row."""
    try:
        eq, report = elasticity.equilibrium_elasticities(p, tech, tol)
    except (equilibrium.EquilibriumError, matching.DomainError) as e:
        raise SweepRowError(f"{economy} at y={p.y!r}: {e}", economy=economy, y=p.y) from e
    return SweepRow(
        economy=economy,
        family=tech.family,
        y=p.y,
        theta=eq.theta,
        u=eq.u,
        w=eq.w,
        q_daily=eq.q,
        f_daily=eq.f,
        q_monthly=monthly_rate(eq.q),
        f_monthly=monthly_rate(eq.f),
        upsilon=report.upsilon,
        eta_theta_y=report.eta_theta_y,
        eta_w_y=report.eta_w_y,
        eta_M_u=report.eta_M_u,
    )

def run_sweep(
        spec: SweepSpec,
        n_jobs: int=1,
        progress: bool=False,
        tol: float=equilibrium.DEFAULT_TOL,
    ) -> List[SweepRow]:
    r"""
    Calibrate once at base y, then solve every grid point with that
    efficiency held fixed.

    Args:
        spec: the economy and its grid
        n_jobs: joblib processes for the grid points, default=1
        progress: show a tqdm bar on stderr
        tol: solver tolerance

    Returns:
        rows: one per grid point, ordered by y
    """
    tech = resolve_technology(spec, tol)
    logger.info(f"Sweeping {spec.economy} ({tech.label()}) over {len(spec.grid)} productivity levels")
    grid = tqdm(spec.grid, desc=spec.economy, disable=not progress)
    rows = Parallel(n_jobs=n_jobs, backend="multiprocessing")(
        delayed(solve_row)(spec.economy, spec.params.with_productivity(y), tech, tol)
        for y in grid
    )
    return sorted(rows, key=lambda row: row.y)

def run_sweeps(
        specs: List[SweepSpec],
        n_jobs: int=1,
        progress: bool=False,
        tol: float=equilibrium.DEFAULT_TOL,
    ) -> List[SweepRow]:
    r"""All rows of several sweeps, economies in the order given."""
    rows = []
    for spec in specs:
        rows.extend(run_sweep(spec, n_jobs=n_jobs, progress=progress, tol=tol))
    return rows

def economy_label(family: str, y: float) -> str:
    return f"{family}_y{y:g}"

def replication_specs(
        base_params: equilibrium.EconomyParams,
        base_ys: Sequence[float]=REPLICATION_YS,
        alpha: float=matching.DEFAULT_ALPHA,
        gamma: float=matching.DEFAULT_GAMMA,
        target_u: float=0.05,
        points: int=DEFAULT_POINTS,
        half_width: float=DEFAULT_HALF_WIDTH,
    ) -> List[SweepSpec]:
    r"""
    Three productivity levels times two technologies, each calibrated to
    the same target unemployment rate: the six-economy experiment.
    """
    specs = []
    for y in base_ys:
        p = base_params.with_productivity(y)
        grid = perturbation_grid(y, points=points, half_width=half_width)
        for family, shape in (('cobb_douglas', alpha), ('nonlinear', gamma)):
            specs.append(SweepSpec(
                economy=economy_label(family, y),
                params=p,
                family=family,
                shape=shape,
                target_u=target_u,
                grid=grid,
            ))
    return specs

def elasticity_panel(specs: List[SweepSpec], rows: List[SweepRow]) -> List[SweepRow]:
    r"""The row of each economy at its base productivity, in the order of `specs`."""
    panel = []
    for spec in specs:
        matches = [row for row in rows if row.economy == spec.economy and row.y == spec.params.y]
        if not matches:
            raise ValueError(f"no row for {spec.economy} at its base productivity y={spec.params.y}")
        panel.append(matches[0])
    return panel

def sweep_frame(rows: List[SweepRow]) -> pd.DataFrame:
    r"""Rows as a DataFrame with the sweep CSV columns, in order."""
    return pd.DataFrame([row.dict() for row in rows], columns=CSV_COLUMNS)

def emit_csv(rows: List[SweepRow], destination: Union[str, IO]):
    r"""
    Write rows in the sweep CSV schema. Floats carry 17 significant digits so
    that load_csv gives back the same numbers.
    """
    if not rows:
        raise ValueError("no sweep rows to write")
    utils.write_frame(sweep_frame(rows), destination, 'sweep', logger)

def load_csv(path: str) -> List[SweepRow]:
    r"""Read a CSV written by emit_csv back into rows."""
    df = pd.read_csv(
        path, dtype={'economy': str, 'family': str}, float_precision='round_trip')
    missing = [column for column in CSV_COLUMNS if column not in df.columns]
    if missing:
        raise ValueError(f"{path} is missing sweep columns {missing}")
    return [SweepRow(**record) for record in df[CSV_COLUMNS].to_dict(orient='records')]
