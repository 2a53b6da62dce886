import os

import pytest

import calibration
import equilibrium

#daily model period with an annual discount factor of 0.95
BETA = 0.95 ** (1.0 / 365)
BASE_YS = (0.61, 0.63, 0.65)
FAMILIES = (('cobb_douglas', 0.5), ('nonlinear', 1.27))
DATA_DIR = os.path.join(os.path.dirname(__file__), 'data')
CONFIG_DIR = os.path.join(os.path.dirname(os.path.dirname(__file__)), 'configs')

def baseline_params(y=0.61, **kwargs):
    fields = dict(y=y, z=0.6, c=0.1, phi=0.5, s=0.001, beta=BETA)
    fields.update(kwargs)
    return equilibrium.EconomyParams(**fields)

def calibrated(y=0.61, family='cobb_douglas', shape=0.5, target_u=0.05, **kwargs):
    p = baseline_params(y, **kwargs)
    target = calibration.CalibrationTarget(target_u=target_u, params=p, family=family, shape=shape)
    return p, calibration.calibrate_efficiency(target)

BASELINE_ECONOMIES = [(y, family, shape) for y in BASE_YS for family, shape in FAMILIES]

@pytest.fixture
def params():
    return baseline_params()

@pytest.fixture(params=BASELINE_ECONOMIES, ids=[f"{f}-{y}" for y, f, _ in BASELINE_ECONOMIES])
def baseline_economy(request):
    y, family, shape = request.param
    return calibrated(y, family, shape)

@pytest.fixture
def data_dir():
    return DATA_DIR

@pytest.fixture
def config_dir():
    return CONFIG_DIR
