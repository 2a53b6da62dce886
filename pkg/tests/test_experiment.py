import io
import pickle

import numpy as np
import pytest
from pydantic import ValidationError

import experiment
import matching
from conftest import BASE_YS, baseline_params

@pytest.fixture(scope='module')
def replication():
    specs = experiment.replication_specs(baseline_params())
    return specs, experiment.run_sweeps(specs)

def rows_of(rows, economy):
    return [row for row in rows if row.economy == economy]

def test_monthly_rate_end_points():
    assert experiment.monthly_rate(0.0) == 0.0
    assert experiment.monthly_rate(1.0) == 1.0

def test_monthly_rate_thirty_days():
    assert experiment.monthly_rate(0.019, 30) == pytest.approx(1 - 0.981 ** 30, abs=1e-12)
    assert experiment.monthly_rate(0.019) == pytest.approx(0.43757, abs=1e-4)

def test_monthly_rate_vectorised():
    out = experiment.monthly_rate(np.array([0.0, 0.5, 1.0]), 2)
    np.testing.assert_allclose(out, [0.0, 0.75, 1.0])

@pytest.mark.parametrize('p,days', [(-0.1, 30), (1.1, 30), (0.5, 0), (0.5, 2.5)])
def test_monthly_rate_domain(p, days):
    with pytest.raises(matching.DomainError):
        experiment.monthly_rate(p, days)

def test_default_grid():
    grid = experiment.perturbation_grid(0.61)
    assert len(grid) == 11
    assert 0.61 in grid
    assert grid == sorted(grid)
    assert grid[0] == pytest.approx(0.605) and grid[-1] == pytest.approx(0.615)

def test_single_point_grid():
    assert experiment.perturbation_grid(0.63, points=1) == [0.63]

def test_grid_contains_base_outside_range():
    grid = experiment.perturbation_grid(0.61, y_min=0.62, y_max=0.64, points=3)
    assert grid == pytest.approx([0.61, 0.62, 0.63, 0.64], abs=1e-15)
    assert grid[0] == 0.61

def test_grid_snaps_nearest_point_to_base():
    grid = experiment.perturbation_grid(0.612, y_min=0.60, y_max=0.62, points=3)
    assert grid == [0.60, 0.612, 0.62]

def test_empty_grid_range():
    with pytest.raises(matching.DomainError):
        experiment.perturbation_grid(0.61, y_min=0.62, y_max=0.62)

def test_spec_requires_base_in_grid():
    with pytest.raises(ValidationError, match='base productivity'):
        experiment.SweepSpec(
            economy='x', params=baseline_params(), family='cobb_douglas', shape=0.5,
            target_u=0.05, grid=[0.62])

def test_spec_rejects_grid_below_nonwork_value():
    with pytest.raises(ValidationError, match='exceed z'):
        experiment.SweepSpec(
            economy='x', params=baseline_params(), family='cobb_douglas', shape=0.5,
            target_u=0.05, grid=[0.59, 0.61])

def test_spec_needs_target_or_efficiency():
    with pytest.raises(ValidationError):
        experiment.SweepSpec(
            economy='x', params=baseline_params(), family='cobb_douglas', shape=0.5, grid=[0.61])

def test_replication_shape(replication):
    specs, rows = replication
    assert len(specs) == 6
    assert len(rows) == 66
    assert [spec.economy for spec in specs] == [
        experiment.economy_label(family, y) for y in BASE_YS for family in ('cobb_douglas', 'nonlinear')]

def test_base_rows_hit_target(replication):
    specs, rows = replication
    for row in experiment.elasticity_panel(specs, rows):
        assert row.u == pytest.approx(0.05, abs=1e-10)

def test_unemployment_falls_with_productivity(replication):
    specs, rows = replication
    for spec in specs:
        sweep = rows_of(rows, spec.economy)
        assert [row.y for row in sweep] == spec.grid
        assert np.all(np.diff([row.u for row in sweep]) < 0)
        assert np.all(np.diff([row.theta for row in sweep]) > 0)

def test_nonlinear_responds_more(replication):
    _, rows = replication
    for y in BASE_YS:
        cd = rows_of(rows, experiment.economy_label('cobb_douglas', y))
        nl = rows_of(rows, experiment.economy_label('nonlinear', y))
        for a, b in zip(cd, nl):
            assert a.y == b.y
            if a.y != y:
                assert abs(b.u - 0.05) > abs(a.u - 0.05)

def test_responses_shrink_with_fundamental_surplus(replication):
    _, rows = replication
    for family in ('cobb_douglas', 'nonlinear'):
        responses = []
        for y in BASE_YS:
            sweep = rows_of(rows, experiment.economy_label(family, y))
            responses.append(abs(sweep[0].u - sweep[-1].u))
        assert responses[0] > responses[1] > responses[2]

def test_monthly_rates_inside_unit_interval(replication):
    _, rows = replication
    for row in rows:
        assert 0 < row.q_monthly < 1
        assert 0 < row.f_monthly < 1

def test_elasticity_consistent_with_grid(replication):
    specs, rows = replication
    for spec in specs:
        sweep = rows_of(rows, spec.economy)
        log_y = np.log([row.y for row in sweep])
        log_theta = np.log([row.theta for row in sweep])
        for i in range(1, len(sweep) - 1):
            slope = (log_theta[i + 1] - log_theta[i - 1]) / (log_y[i + 1] - log_y[i - 1])
            assert slope == pytest.approx(sweep[i].eta_theta_y, rel=3e-2)

def test_elasticity_panel_orders(replication):
    specs, rows = replication
    panel = experiment.elasticity_panel(specs, rows)
    assert [row.economy for row in panel] == [spec.economy for spec in specs]
    for cd, nl in zip(panel[::2], panel[1::2]):
        assert nl.eta_theta_y > cd.eta_theta_y
        assert nl.eta_w_y > cd.eta_w_y
        assert cd.eta_M_u == 0.5

def test_elasticity_panel_missing_row(replication):
    specs, rows = replication
    with pytest.raises(ValueError):
        experiment.elasticity_panel(specs, rows[:1])

def test_emit_one_row():
    specs = experiment.replication_specs(baseline_params(), base_ys=(0.61,), points=1)
    rows = experiment.run_sweep(specs[0])
    out = io.StringIO()
    experiment.emit_csv(rows, out)
    lines = out.getvalue().split('\n')
    assert lines[-1] == ''
    assert len(lines) == 3
    assert lines[0] == ','.join(experiment.CSV_COLUMNS)
    assert lines[1].startswith('cobb_douglas_y0.61,cobb_douglas,0.60999999999999999,')

def test_emit_writes_sweep_frame(replication):
    _, rows = replication
    frame = experiment.sweep_frame(rows)
    assert list(frame.columns) == experiment.CSV_COLUMNS
    assert all(frame[column].dtype == np.float64 for column in experiment.CSV_COLUMNS[2:])
    out = io.StringIO()
    experiment.emit_csv(rows, out)
    assert out.getvalue() == frame.to_csv(index=False, float_format='%.17g', lineterminator='\n')

def test_emit_and_load_round_trip(replication, tmp_path):
    _, rows = replication
    fp = tmp_path / 'sweep.csv'
    experiment.emit_csv(rows, str(fp))
    assert len(fp.read_text(encoding='utf-8').splitlines()) == 67
    loaded = experiment.load_csv(str(fp))
    assert len(loaded) == len(rows)
    for a, b in zip(rows, loaded):
        assert a.economy == b.economy and a.family == b.family
        for column in experiment.CSV_COLUMNS[2:]:
            assert getattr(b, column) == pytest.approx(getattr(a, column), rel=1e-12)

def test_emit_is_deterministic(tmp_path):
    specs = experiment.replication_specs(baseline_params(), base_ys=(0.63,), points=5)
    first, second = tmp_path / 'a.csv', tmp_path / 'b.csv'
    experiment.emit_csv(experiment.run_sweeps(specs), str(first))
    experiment.emit_csv(experiment.run_sweeps(specs), str(second))
    assert first.read_bytes() == second.read_bytes()
    assert b'\r' not in first.read_bytes()

def test_emit_nothing():
    with pytest.raises(ValueError):
        experiment.emit_csv([], io.StringIO())

def test_emit_to_missing_directory(tmp_path, replication):
    _, rows = replication
    with pytest.raises(OSError, match='sweep CSV'):
        experiment.emit_csv(rows, str(tmp_path / 'missing' / 'sweep.csv'))

def test_failing_row_names_economy_and_productivity():
    #a nonlinear fill probability is capped by its efficiency, so low y has no bracket
    spec = experiment.SweepSpec(
        economy='thin', params=baseline_params(), family='nonlinear', shape=1.27,
        efficiency=0.03, grid=[0.605, 0.61])
    with pytest.raises(experiment.SweepRowError) as e:
        experiment.run_sweep(spec)
    assert e.value.economy == 'thin'
    assert e.value.y == 0.605
    again = pickle.loads(pickle.dumps(e.value))
    assert (again.economy, again.y, str(again)) == ('thin', 0.605, str(e.value))

def test_fixed_efficiency_is_not_recalibrated():
    spec = experiment.SweepSpec(
        economy='fixed', params=baseline_params(), family='cobb_douglas', shape=0.5,
        efficiency=0.05, grid=[0.61])
    tech = experiment.resolve_technology(spec)
    assert tech.efficiency == 0.05

def test_parallel_rows_match_serial():
    specs = experiment.replication_specs(baseline_params(), base_ys=(0.61,), points=3)
    serial = experiment.run_sweeps(specs, n_jobs=1)
    parallel = experiment.run_sweeps(specs, n_jobs=2)
    assert [row.dict() for row in parallel] == [row.dict() for row in serial]
