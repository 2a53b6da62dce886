import argparse
import collections.abc
import json
import logging
import os
import sys
from typing import *
from typing import IO #above * doesn't get this one

import yaml

class ArgParseHelpFormatter(
        argparse.ArgumentDefaultsHelpFormatter,
        argparse.RawDescriptionHelpFormatter
    ):
    r"""Format help text in the arg parser in a prettier way."""
    pass

def update_dict_recursively(d, u):
    r"""
    Normal dict.update() results in nested dicts being overwritten wholesale.
    We need to update the keys inside of the nested dicts as well, so that
    e.g. a later config can change only technology.efficiency.
    """
    #https://stackoverflow.com/a/3233356
    for k, v in u.items():
        if isinstance(v, collections.abc.Mapping):
            d[k] = update_dict_recursively(d.get(k, {}), v)
        else:
            d[k] = v
    return d

def load_config(path: str) -> dict:
    r"""Read one json (or yaml) config file into a dict."""
    with open(path, 'r', encoding='utf-8') as infile:
        c = yaml.safe_load(infile)
    if c is None:
        c = {}
    if not isinstance(c, collections.abc.Mapping):
        raise ValueError(f"Config must contain a mapping at the top level: {path}")
    return dict(c)

def parse_configs(configs: List[str], parser=None):
    r"""
    Merge the config files (later override earlier) and optionally validate
    the merged document with a pydantic `parser` class.
    """
    pconfig = {}
    for config in configs:
        pconfig = update_dict_recursively(pconfig, load_config(config))
    if parser is None:
        return pconfig
    return parser.parse_obj(pconfig)

def write_json_line(data: Union[dict, list], fh: IO):
    r"""Write json-compatible data into the fh stream."""
    s = json.dumps(data, ensure_ascii=False, sort_keys=True)
    fh.write(s + '\n')

def write_frame(df, destination: Union[str, IO], what: str, logger=None):
    r"""
    Write a pandas DataFrame as CSV with `%.17g` floats and '\n' line endings.
    destination is a path or an open text stream; `what` names the table in
    error messages.
    """
    if not isinstance(destination, (str, os.PathLike)):
        df.to_csv(destination, index=False, float_format='%.17g', lineterminator='\n')
        return
    try:
        df.to_csv(destination, index=False, float_format='%.17g', lineterminator='\n', encoding='utf-8')
    except OSError as e:
        raise OSError(e.errno, f"Cannot write {what} CSV {destination}: {e.strerror}") from e
    if logger is not None:
        logger.info(f"Wrote {len(df)} rows to {destination}")

def setup_logger(
        name='dmp',
        folder=None,
        level=logging.INFO,
        to_stderr=True
    ):
    r"""
    Log to stderr, and also to the file at folder/name.log when a folder is
    given. Stdout is left alone because the commands print their results
    there. Calling it again (e.g. cli.main called twice in tests) updates the
    stderr level and adds a file handler for a folder not seen before.
    """
    logger = logging.getLogger(name)
    logger.setLevel(level)

    for handler in logger.handlers:
        if isinstance(handler, _StderrHandler):
            handler.setLevel(level)

    if folder is not None:
        os.makedirs(folder, exist_ok=True)
        fp = os.path.abspath(os.path.join(folder, name + '.log'))
        if not any(isinstance(h, logging.FileHandler) and h.baseFilename == fp for h in logger.handlers):
            #delay is a half-fix for mem leak: https://bugs.python.org/issue23010
            file_handler = logging.FileHandler(fp, delay=True)
            file_handler.setLevel(logging.DEBUG)
            file_formatter = logging.Formatter('[%(asctime)s:%(levelname)s:%(name)s:%(lineno)d] %(message)s')
            file_handler.setFormatter(file_formatter)
            logger.addHandler(file_handler)

    if to_stderr and not any(isinstance(h, _StderrHandler) for h in logger.handlers):
        #resolve sys.stderr lazily so pytest's capture sees the messages
        stream_handler = _StderrHandler()
        stream_handler.setLevel(level)
        stream_formatter = logging.Formatter('[%(levelname)s:%(name)s:%(lineno)d] %(message)s')
        stream_handler.setFormatter(stream_formatter)
        logger.addHandler(stream_handler)

    return logger

class _StderrHandler(logging.StreamHandler):
    r"""A StreamHandler that always writes to the current sys.stderr."""

    def __init__(self):
        super().__init__(sys.stderr)

    @property
    def stream(self):
        return sys.stderr

    @stream.setter
    def stream(self, value):
        pass
