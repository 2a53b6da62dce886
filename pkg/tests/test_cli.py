import json
import logging
import os

import pytest

import cli
import empirics
import experiment
import make_replication_configs
import matching
from conftest import CONFIG_DIR, DATA_DIR

CONFIGS = [os.path.join(CONFIG_DIR, f"replication_y{y}.json") for y in ('0.61', '0.63', '0.65')]
UNEMPLOY = os.path.join(DATA_DIR, 'UNEMPLOY.csv')
JTSJOL = os.path.join(DATA_DIR, 'JTSJOL.csv')

def write_config(tmp_path, name='economy.json', **changes):
    with open(CONFIGS[0], encoding='utf-8') as fh:
        config = json.load(fh)
    for key, value in changes.items():
        if value is None:
            config.pop(key, None)
        else:
            config[key] = value
    fp = tmp_path / name
    fp.write_text(json.dumps(config), encoding='utf-8')
    return str(fp)

def run(capsys, *argv):
    code = cli.main(['--quiet'] + list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err

def values(text):
    return dict(line.split('=', 1) for line in text.splitlines() if '=' in line)

def test_solve_baseline_economy(capsys):
    code, out, _ = run(capsys, 'solve', CONFIGS[0])
    assert code == 0
    result = values(out)
    assert result['u*'] == '0.0500000'
    assert float(result['theta*']) == pytest.approx(0.089281, rel=1e-5)
    assert result['technology'].startswith('cobb_douglas')

def test_solve_json(capsys):
    code, out, _ = run(capsys, 'solve', CONFIGS[1], '--format', 'json')
    assert code == 0
    record = json.loads(out)
    assert record['economy'] == 'replication_y0.63'
    assert record['equilibrium']['u'] == pytest.approx(0.05, abs=1e-10)
    assert record['elasticity']['eta_theta_y'] > 1

def test_solve_both_families(capsys):
    code, out, _ = run(capsys, 'solve', CONFIGS[0], '--both-families')
    assert code == 0
    blocks = out.strip().split('\n\n')
    assert [values(block)['economy'] for block in blocks] == [
        'replication_y0.61_cobb_douglas', 'replication_y0.61_nonlinear']

def test_no_equilibrium_exits_3(capsys, tmp_path):
    path = write_config(tmp_path, y=0.6)
    code, out, err = run(capsys, 'solve', path)
    assert code == 3
    assert out == ''
    assert 'initial vacancy' in err

def test_sweep_without_equilibrium_writes_nothing(capsys, tmp_path):
    path = write_config(tmp_path, y=0.6)
    target = tmp_path / 'sweep.csv'
    code, _, _ = run(capsys, 'sweep', path, '--out', str(target))
    assert code == 3
    assert not target.exists()

def test_two_discount_rates_exit_2(capsys, tmp_path):
    path = write_config(tmp_path, r=0.0001)
    code, _, err = run(capsys, 'solve', path)
    assert code == 2
    assert 'exactly one of r, beta' in err

def test_unknown_key_lists_accepted_keys(capsys, tmp_path):
    path = write_config(tmp_path, productivity=0.61)
    code, _, err = run(capsys, 'solve', path)
    assert code == 2
    assert 'productivity' in err
    assert 'target_u' in err

def test_missing_config_exit_2(capsys, tmp_path):
    code, _, _ = run(capsys, 'solve', str(tmp_path / 'nope.json'))
    assert code == 2

def test_bad_arguments_exit_2(capsys):
    code, _, _ = run(capsys, 'sweep', CONFIGS[0], '--points', '0')
    assert code == 2

def test_annual_interest_rate(capsys, tmp_path):
    path = write_config(tmp_path, beta=None, annual_interest_rate=1 / 0.95 - 1)
    code, out, _ = run(capsys, 'solve', path)
    assert code == 0
    assert values(out)['u*'] == '0.0500000'

def test_override_changes_one_key(capsys, tmp_path):
    override = tmp_path / 'override.json'
    override.write_text(json.dumps({'technology': {'family': 'nonlinear'}}), encoding='utf-8')
    code, out, _ = run(capsys, 'solve', CONFIGS[0], '--override', str(override))
    assert code == 0
    result = values(out)
    assert result['technology'].startswith('nonlinear')
    assert result['u*'] == '0.0500000'

def test_replication_sweep(capsys, tmp_path):
    target = tmp_path / 'sweep.csv'
    code, out, _ = run(capsys, 'sweep', *CONFIGS, '--both-families', '--out', str(target))
    assert code == 0
    assert out == ''
    rows = experiment.load_csv(str(target))
    assert len(rows) == 66
    assert len({row.economy for row in rows}) == 6
    base = [row for row in rows if row.economy == 'replication_y0.65_nonlinear' and row.y == 0.65]
    assert len(base) == 1 and base[0].u == pytest.approx(0.05, abs=1e-10)

def test_sweep_is_deterministic(capsys):
    _, first, _ = run(capsys, 'sweep', CONFIGS[2], '--points', '5')
    _, second, _ = run(capsys, 'sweep', CONFIGS[2], '--points', '5')
    assert first == second
    assert len(first.splitlines()) == 6

def test_single_point_sweep_is_solve(capsys):
    _, sweep, _ = run(capsys, 'sweep', CONFIGS[1], '--points', '1')
    _, solve, _ = run(capsys, 'solve', CONFIGS[1], '--format', 'csv')
    assert sweep == solve
    assert len(sweep.splitlines()) == 2

def test_calibrate_round_trip(capsys, tmp_path):
    code, out, _ = run(capsys, 'calibrate', CONFIGS[0], '--out-dir', str(tmp_path))
    assert code == 0
    efficiency = float(values(out)['efficiency'])
    assert efficiency == pytest.approx(0.063588, rel=1e-4)
    written = tmp_path / 'replication_y0.61.json'
    with open(written, encoding='utf-8') as fh:
        config = json.load(fh)
    assert config['technology']['efficiency'] == efficiency
    #the written efficiency is used as is
    code, out, _ = run(capsys, 'solve', str(written), '--format', 'json')
    assert code == 0
    record = json.loads(out)
    assert record['efficiency'] == efficiency
    assert record['equilibrium']['u'] == pytest.approx(0.05, abs=1e-10)

def test_calibrate_json(capsys):
    code, out, _ = run(capsys, 'calibrate', CONFIGS[0], '--both-families', '--format', 'json')
    assert code == 0
    records = [json.loads(line) for line in out.splitlines()]
    assert [record['family'] for record in records] == ['cobb_douglas', 'nonlinear']
    assert records[1]['efficiency'] == pytest.approx(0.22056, rel=1e-4)
    assert all(record['f'] == pytest.approx(0.019) for record in records)

def test_infeasible_target_exits_3(capsys, tmp_path):
    path = write_config(tmp_path, s=0.1)
    code, _, _ = run(capsys, 'calibrate', path)
    assert code == 3

def test_elasticity_text(capsys):
    code, out, _ = run(capsys, 'elasticity', CONFIGS[0])
    assert code == 0
    result = values(out)
    assert float(result['eta_theta_y']) == pytest.approx(64.45, rel=1e-3)
    assert float(result['fd_eta_theta_y']) == pytest.approx(float(result['eta_theta_y']), rel=1e-4)
    assert result['at_equilibrium'] == 'True'

def test_elasticity_json_and_csv(capsys):
    _, out, _ = run(capsys, 'elasticity', *CONFIGS, '--both-families', '--format', 'json')
    records = [json.loads(line) for line in out.splitlines()]
    assert len(records) == 6
    for cd, nl in zip(records[::2], records[1::2]):
        assert nl['elasticity']['eta_theta_y'] > cd['elasticity']['eta_theta_y']
    code, out, _ = run(capsys, 'elasticity', *CONFIGS, '--both-families', '--format', 'csv')
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == ','.join(experiment.CSV_COLUMNS)
    assert len(lines) == 7

def test_bounds(capsys, tmp_path):
    target = tmp_path / 'bounds.csv'
    code, _, _ = run(capsys, 'bounds', UNEMPLOY, JTSJOL, '--out', str(target))
    assert code == 0
    lines = target.read_text(encoding='utf-8').splitlines()
    assert lines[0] == 'date,theta,bound_cd,bound_nl'
    assert len(lines) == 25

def test_bounds_with_start(capsys):
    code, out, _ = run(capsys, 'bounds', UNEMPLOY, JTSJOL, '--start', '2009-07')
    assert code == 0
    assert len(out.splitlines()) == 7

def test_bounds_join_error(capsys):
    code, _, err = run(capsys, 'bounds', UNEMPLOY, JTSJOL, '--start', '2020-01')
    assert code == 2
    assert 'share no month' in err

def test_bounds_bad_file(capsys, tmp_path):
    bad = tmp_path / 'bad.csv'
    bad.write_text("DATE,UNEMPLOY\n2001-01-01,lots\n", encoding='utf-8')
    code, _, err = run(capsys, 'bounds', str(bad), JTSJOL)
    assert code == 2
    assert 'bad.csv:2' in err

def test_beveridge(capsys):
    code, out, _ = run(capsys, 'beveridge', UNEMPLOY, JTSJOL)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == 'date,u_thousands,v_thousands'
    assert len(lines) == 25

def test_convert_rate(capsys):
    code, out, _ = run(capsys, 'convert-rate', '--daily', '0.019')
    assert code == 0
    assert float(out) == pytest.approx(1 - 0.981 ** 30, abs=1e-12)

def test_convert_rate_out_of_range(capsys):
    code, _, _ = run(capsys, 'convert-rate', '--daily', '1.5')
    assert code == 3

def test_replication_configs(tmp_path, capsys):
    paths = make_replication_configs.main(outdir=str(tmp_path), ys=(0.61, 0.65), family='nonlinear')
    assert [os.path.basename(path) for path in paths] == ['replication_y0.61.json', 'replication_y0.65.json']
    code, out, _ = run(capsys, 'solve', *paths)
    assert code == 0
    blocks = out.strip().split('\n\n')
    assert len(blocks) == 2
    assert all(values(block)['technology'].startswith('nonlinear') for block in blocks)

def test_bundled_configs_match_generator(tmp_path):
    for path in make_replication_configs.main(outdir=str(tmp_path)):
        with open(path, encoding='utf-8') as fh, \
             open(os.path.join(CONFIG_DIR, os.path.basename(path)), encoding='utf-8') as bundled:
            generated, shipped = json.load(fh), json.load(bundled)
        assert generated.pop('beta') == pytest.approx(shipped.pop('beta'), rel=1e-15)
        assert generated == shipped

@pytest.mark.parametrize('bounds', [('0.62', '0.62'), ('0.64', '0.62')])
def test_empty_sweep_range_exits_2(capsys, tmp_path, bounds):
    target = tmp_path / 'sweep.csv'
    code, _, err = run(capsys, 'sweep', CONFIGS[0], '--y-min', bounds[0], '--y-max', bounds[1],
                       '--out', str(target))
    assert code == 2
    assert 'empty productivity range' in err
    assert not target.exists()

def test_log_dir_after_earlier_run(capsys, tmp_path):
    missing = str(tmp_path / 'nope.json')
    assert run(capsys, 'solve', missing)[0] == 2
    log_dir = tmp_path / 'logs'
    try:
        assert run(capsys, '--log-dir', str(log_dir), 'solve', missing)[0] == 2
        assert 'nope.json' in (log_dir / 'dmp.log').read_text(encoding='utf-8')
    finally:
        root = logging.getLogger('dmp')
        for handler in list(root.handlers):
            if isinstance(handler, logging.FileHandler):
                root.removeHandler(handler)
                handler.close()

def test_shape_defaults_shared():
    parsed = cli.parse_args(['bounds', UNEMPLOY, JTSJOL])
    assert (parsed.alpha, parsed.gamma) == (matching.DEFAULT_ALPHA, matching.DEFAULT_GAMMA)
    assert not hasattr(experiment, 'DEFAULT_ALPHA') and not hasattr(empirics, 'DEFAULT_GAMMA')
    with open(CONFIGS[0], encoding='utf-8') as fh:
        technology = json.load(fh)['technology']
    assert technology['alpha'] == matching.DEFAULT_ALPHA
    assert technology['gamma'] == matching.DEFAULT_GAMMA
