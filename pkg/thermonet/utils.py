# coding: utf-8
# vim:sw=4:ts=4:et:
"""thermonet utils."""
import json
import logging
import os

from thermonet.const import (
    CSV_FLOAT_FORMAT, MSG_FORMAT, MSG_MISSING_FILE, SEED_ENV)
from thermonet.exceptions import ConfigError, DataError

_LOGGER = logging.getLogger(__name__)


def _exists_file(filename):
    """Raise DataError if filename does not exist."""
    if not os.path.isfile(filename):
        raise DataError(MSG_MISSING_FILE.format(filename))
    return True


def _ensure_parent(filename):
    """Create the directory holding filename."""
    parent = os.path.dirname(os.path.abspath(filename))
    if not os.path.isdir(parent):
        os.makedirs(parent)
    return parent


def _save_json(data, filename):
    """Dump data into a JSON file with sorted keys."""
    _ensure_parent(filename)
    with open(filename, 'w') as fdp:
        json.dump(data, fdp, sort_keys=True, indent=2)
        fdp.write('\n')
    return True


def _read_json(filename, error=DataError):
    """Read data from a JSON file."""
    if not os.path.isfile(filename):
        raise error(MSG_MISSING_FILE.format(filename))
    try:
        with open(filename) as fdp:
            return json.load(fdp)
    except ValueError as err:
        raise error('{0}: {1}'.format(filename, err))


def _save_jsonl(records, filename):
    """Write one JSON record per line."""
    _ensure_parent(filename)
    with open(filename, 'w') as fdp:
        for record in records:
            fdp.write(json.dumps(record, sort_keys=True))
            fdp.write('\n')
    return True


def _read_jsonl(filename):
    """Yield the JSON records of a line-delimited file."""
    _exists_file(filename)
    with open(filename) as fdp:
        for number, line in enumerate(fdp, 1):
            if not line.strip():
                continue
            try:
                yield json.loads(line)
            except ValueError as err:
                raise DataError('{0}:{1}: {2}'.format(filename, number, err))


def _check_version(found, expected, kind):
    """Raise DataError on an unknown file format version."""
    if found != expected:
        raise DataError(MSG_FORMAT.format(kind, found))


def _save_csv(frame, filename):
    """Write a pandas DataFrame as comma separated text."""
    _ensure_parent(filename)
    frame.to_csv(filename, index=False, float_format=CSV_FLOAT_FORMAT)
    _LOGGER.debug("Wrote %d rows to %s", len(frame), filename)
    return True


def _resolve_seed(seed):
    """Return the seed, overridden by the environment when set."""
    override = os.environ.get(SEED_ENV)
    if override is None or override == '':
        return seed
    try:
        return int(override)
    except ValueError:
        raise ConfigError('{0} must be an integer (got {1!r}).'.format(
            SEED_ENV, override))
