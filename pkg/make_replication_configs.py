r"""
Write the replication bundle: one economy config per base productivity,
daily model period, calibrated to 5 percent unemployment.

    python make_replication_configs.py --outdir configs
"""
import json
import logging
import os
from typing import *

import cli
import matching

logger = logging.getLogger('dmp.make_replication_configs')
logger.setLevel(logging.INFO)

#annual discount factor 0.95, daily model period
ANNUAL_DISCOUNT = 0.95
DAILY_BETA = ANNUAL_DISCOUNT ** (1.0 / cli.DAYS_PER_YEAR)

BASE = {
    'z': 0.6,
    'c': 0.1,
    'phi': 0.5,
    's': 0.001,
    'beta': DAILY_BETA,
    'technology': {'family': 'cobb_douglas', 'alpha': matching.DEFAULT_ALPHA, 'gamma': matching.DEFAULT_GAMMA},
    'target_u': 0.05,
}

def replication_config(y: float, family: str='cobb_douglas') -> dict:
    config = json.loads(json.dumps(BASE))
    config['y'] = y
    config['technology']['family'] = family
    #fails loudly if the bundle ever stops matching the cli schema
    cli.EconomyConfig.parse_obj(config)
    return config

def main(
        outdir='configs',
        ys=(0.61, 0.63, 0.65),
        family='cobb_douglas',
        prefix='replication',
    ):
    r"""
    Args:
        outdir: directory for the json files
        ys: base productivity levels, one file each
        family: technology family written into the configs; the sweep
            command's --both-families runs the other one as well
        prefix: file name prefix, files are <prefix>_y<y>.json
    """
    os.makedirs(outdir, exist_ok=True)
    paths = []
    for y in ys:
        fp = os.path.join(outdir, f"{prefix}_y{y:g}.json")
        with open(fp, 'w', encoding='utf-8') as fh:
            json.dump(replication_config(y, family), fh, indent=2, sort_keys=True)
            fh.write('\n')
        paths.append(fp)
    logger.info(f"Wrote {len(paths)} configs to {outdir}")
    return paths

if __name__ == '__main__':
    import fire
    fire.Fire(main)
