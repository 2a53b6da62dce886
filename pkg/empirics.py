r"""
Observed labor market series: unemployed persons and job openings (both in
thousands, as exported from FRED), the tightness they imply, the upper
bound 1/eta_{M,u} on Upsilon along that tightness path, and the points of
the Beveridge curve.

Only local CSV exports are read; there is no network client.
"""
import logging
from typing import *
from typing import IO

import numpy as np
import pandas as pd
from pydantic import BaseModel

import matching
import utils

logger = logging.getLogger('dmp.empirics')
logger.setLevel(logging.INFO)

DATE_COLUMNS = ('DATE', 'observation_date')
MISSING_MARKER = '.'
#openings data start in December 2000
DATE_FLOOR = '2000-12'

BOUNDS_COLUMNS = ['date', 'theta', 'bound_cd', 'bound_nl']
BEVERIDGE_COLUMNS = ['date', 'u_thousands', 'v_thousands']

class SeriesFormatError(ValueError):
    """Raise for CSV series that do not have the expected columns or values."""

class JoinError(ValueError):
    """Raise when two series share no month."""

class LaborSeries(BaseModel):
    r"""
    A monthly series indexed by pandas Period, strictly increasing, positive
    values, plus the bookkeeping of what was left out when it was read.
    """
    series_id: str
    data: pd.Series
    count_in: int = 0
    missing_count: int = 0
    dropped_by_date: int = 0

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    def __len__(self):
        return len(self.data)

class TightnessSeries(BaseModel):
    r"""
    Monthly theta_t = v_t/u_t in the `theta` column of `frame`, with the
    bound columns bound_cd and bound_nl once bound_series has run.
    """
    frame: pd.DataFrame
    alpha: Optional[float] = None
    gamma: Optional[float] = None

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    def __len__(self):
        return len(self.frame)

    @property
    def dates(self) -> pd.PeriodIndex:
        return self.frame.index

class BeveridgeCurve(BaseModel):
    r"""Paired (u, v) observations and their sample correlation (None if undefined)."""
    points: pd.DataFrame
    correlation: Optional[float] = None

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

def _to_period(value) -> pd.Period:
    return pd.Period(value, freq='M')

def load_series(
        path: str,
        date_columns: Sequence[str]=DATE_COLUMNS,
        value_column: Optional[str]=None,
        start: Optional[str]=None,
    ) -> LaborSeries:
    r"""
    Read a FRED-style export: a date column (DATE or observation_date), one
    value column, `.` for missing observations.

    Args:
        path: the csv file
        date_columns: accepted names of the date column
        value_column: the value column, default=the one column besides the date
        start: drop observations before this month (e.g. '2000-12')

    Returns:
        the sorted series; missing_count and dropped_by_date record what was
        skipped, so count_in = len + missing_count + dropped_by_date
    """
    #blank lines are kept so that row i sits on line i + 2 of the file
    df = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True, skip_blank_lines=False)
    df = df.fillna('')
    blank = df.apply(lambda column: column.str.strip() == '').all(axis=1)
    date_column = next((name for name in date_columns if name in df.columns), None)
    if date_column is None:
        raise SeriesFormatError(
            f"{path}: no date column, expected one of {list(date_columns)}, got {list(df.columns)}")
    if value_column is None:
        others = [name for name in df.columns if name != date_column]
        if len(others) != 1:
            raise SeriesFormatError(
                f"{path}: expected exactly one value column next to {date_column}, got {others}")
        value_column = others[0]
    elif value_column not in df.columns:
        raise SeriesFormatError(
            f"{path}: missing value column {value_column!r}, expected columns "
            f"{[date_column, value_column]}, got {list(df.columns)}")

    floor = None if start is None else _to_period(start)
    dates, values = [], []
    missing = dropped = 0
    for i, (is_blank, raw_date, raw_value) in enumerate(zip(blank, df[date_column], df[value_column])):
        line = i + 2 #header is line 1
        if is_blank:
            continue
        raw_value = raw_value.strip()
        if raw_value == MISSING_MARKER:
            missing += 1
            continue
        try:
            stamp = pd.Timestamp(raw_date.strip())
        except (ValueError, TypeError):
            stamp = pd.NaT
        if pd.isna(stamp): #an empty string parses to NaT
            raise SeriesFormatError(f"{path}:{line}: cannot parse date {raw_date!r}")
        date = stamp.to_period('M')
        try:
            value = float(raw_value)
        except ValueError:
            raise SeriesFormatError(f"{path}:{line}: cannot parse value {raw_value!r}")
        if not value > 0:
            raise SeriesFormatError(f"{path}:{line}: value must be positive, got {value}")
        if floor is not None and date < floor:
            dropped += 1
            continue
        dates.append(date)
        values.append(value)

    series = pd.Series(values, index=pd.PeriodIndex(dates, freq='M'), dtype=float, name=value_column)
    duplicated = series.index[series.index.duplicated()]
    if len(duplicated):
        raise SeriesFormatError(f"{path}: duplicate months {[str(d) for d in duplicated]}")
    series = series.sort_index()
    if missing:
        logger.warning(f"Skipped {missing} missing observations in {path}")
    logger.debug(f"Read {len(series)} observations of {value_column} from {path}")
    return LaborSeries(
        series_id=value_column,
        data=series,
        count_in=len(df) - int(blank.sum()),
        missing_count=missing,
        dropped_by_date=dropped,
    )

def _join(unemp: LaborSeries, vac: LaborSeries, start: Optional[str]) -> pd.DataFrame:
    if not len(unemp) or not len(vac):
        raise JoinError(f"cannot join empty series ({unemp.series_id}: {len(unemp)}, {vac.series_id}: {len(vac)})")
    joined = pd.concat(
        {'u_thousands': unemp.data, 'v_thousands': vac.data}, axis=1, join='inner')
    if start is not None:
        joined = joined[joined.index >= _to_period(start)]
    if joined.empty:
        raise JoinError(
            f"{unemp.series_id} and {vac.series_id} share no month"
            + (f" from {start} on" if start is not None else ""))
    return joined

def tightness_series(
        unemp: LaborSeries,
        vac: LaborSeries,
        start: Optional[str]=DATE_FLOOR,
    ) -> TightnessSeries:
    r"""theta_t = v_t/u_t over the months both series share, from `start` on."""
    joined = _join(unemp, vac, start)
    frame = pd.DataFrame({'theta': joined['v_thousands'] / joined['u_thousands']})
    return TightnessSeries(frame=frame)

def bound_values(tech: matching.MatchingTechnology, theta) -> np.ndarray:
    r"""1/eta_{M,u}(theta_t): 1/alpha for Cobb-Douglas, (1 + theta^gamma)/theta^gamma for nonlinear."""
    return np.asarray(matching.elasticity_bound(tech, theta), dtype=float)

def bound_series(
        ts: TightnessSeries,
        alpha: float=matching.DEFAULT_ALPHA,
        gamma: float=matching.DEFAULT_GAMMA,
    ) -> TightnessSeries:
    r"""The tightness series with the bound of each technology alongside."""
    theta = ts.frame['theta'].to_numpy()
    frame = ts.frame[['theta']].copy()
    frame['bound_cd'] = bound_values(matching.make_technology('cobb_douglas', alpha), theta)
    frame['bound_nl'] = bound_values(matching.make_technology('nonlinear', gamma), theta)
    return TightnessSeries(frame=frame, alpha=alpha, gamma=gamma)

def beveridge_points(
        unemp: LaborSeries,
        vac: LaborSeries,
        start: Optional[str]=DATE_FLOOR,
    ) -> BeveridgeCurve:
    r"""
    The (u, v) pairs over the same months as tightness_series, and their
    correlation.
    """
    joined = _join(unemp, vac, start)
    correlation = None
    if len(joined) >= 2:
        value = joined['u_thousands'].corr(joined['v_thousands'])
        if np.isfinite(value):
            correlation = float(value)
    if correlation is None:
        logger.warning(f"Correlation undefined on {len(joined)} point(s) without variation")
    return BeveridgeCurve(points=joined, correlation=correlation)

def _dates(index: pd.PeriodIndex) -> List[str]:
    return list(index.to_timestamp(how='start').strftime('%Y-%m-%d'))

def write_bounds_csv(ts: TightnessSeries, destination: Union[str, IO]):
    r"""Write `date,theta,bound_cd,bound_nl`."""
    if 'bound_cd' not in ts.frame.columns:
        ts = bound_series(ts)
    df = ts.frame.reset_index(drop=True)
    df.insert(0, 'date', _dates(ts.frame.index))
    utils.write_frame(df[BOUNDS_COLUMNS], destination, 'bounds', logger)

def write_beveridge_csv(curve: BeveridgeCurve, destination: Union[str, IO]):
    r"""Write `date,u_thousands,v_thousands`."""
    df = curve.points.reset_index(drop=True)
    df.insert(0, 'date', _dates(curve.points.index))
    utils.write_frame(df[BEVERIDGE_COLUMNS], destination, 'Beveridge curve', logger)
