"""Persistence of runs: CSV tables and JSON metadata.

Every float goes through ``repr`` so identical runs write byte-identical
files, and every table has a fixed column order. Tables are written as
``<name>.csv``, ``<name>.json`` or both, following ``[output] formats``;
``meta.json`` is always written.
"""
from __future__ import print_function, division, absolute_import

import csv
import hashlib
import io
import json
import logging
import os

import numpy as np

from . import measures
from .diagnostics import CSV_COLUMNS, DiagnosticsRecord
from .utils import ConfigError

logger = logging.getLogger('phasekit')

FORMATS = ('csv', 'json')
NSK_SNAPSHOT_COLUMNS = ('x', 'rho', 'u', 'c')
BN_SNAPSHOT_COLUMNS = ('x', 'alpha_p', 'alpha_m', 'rho_p', 'rho_m', 'u', 'c')
EXTRA_COLUMNS = ('t', 'c_grad_sup', 'closure_drift')
DISTANCE_COLUMNS = ('t', 'dict_distance', 'wasserstein_avg')
U_ERROR_COLUMNS = ('t', 'u_err')


def _cell(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _json_cell(value):
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    return value


def check_formats(formats):
    formats = tuple(formats)
    if not formats or not set(formats) <= set(FORMATS):
        raise ConfigError("output formats must be a non-empty subset of {} "
                          "(got {!r})".format(FORMATS, formats))
    return formats


def write_csv(path, header, rows):
    with io.open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    logger.debug("wrote %s", path)
    return path


def write_json(path, obj):
    with io.open(path, 'w', encoding='utf-8') as f:
        f.write(json.dumps(obj, indent=2, sort_keys=True))
        f.write('\n')
    logger.debug("wrote %s", path)
    return path


def write_table(stem, header, rows, formats=FORMATS):
    """Write one table as ``stem + '.csv'`` and/or ``stem + '.json'``.

    Returns
    -------
    list of str
        The paths written, CSV first.
    """
    formats = check_formats(formats)
    rows = [list(row) for row in rows]
    written = []
    if 'csv' in formats:
        written.append(write_csv(stem + '.csv', header, rows))
    if 'json' in formats:
        written.append(write_json(stem + '.json', {
            'columns': list(header),
            'rows': [[_json_cell(v) for v in row] for row in rows]}))
    return written


def read_table(stem):
    """Header and raw rows of a table, from the CSV or else the JSON copy.

    CSV cells come back as strings, JSON cells with their JSON types.
    """
    if os.path.exists(stem + '.csv'):
        with io.open(stem + '.csv', newline='', encoding='utf-8') as f:
            reader = csv.reader(f)
            header = next(reader)
            return header, [row for row in reader if row]
    if os.path.exists(stem + '.json'):
        with io.open(stem + '.json', encoding='utf-8') as f:
            table = json.load(f)
        return table['columns'], table['rows']
    raise ConfigError("no table {0}.csv or {0}.json".format(stem))


def _float_table(stem):
    header, rows = read_table(stem)
    return header, [[float(v) for v in row] for row in rows]


def provenance(config):
    """``phasekit <version> config-sha256:<digest of the config echo>``."""
    from . import __version__
    digest = hashlib.sha256(
        json.dumps(config.to_dict(), sort_keys=True).encode('utf-8')).hexdigest()
    return 'phasekit {} config-sha256:{}'.format(__version__, digest)


def write_meta(directory, config, **summary):
    meta = {'config': config.to_dict(), 'provenance': provenance(config)}
    meta.update(summary)
    return write_json(os.path.join(directory, 'meta.json'), meta)


def snapshot_columns(state):
    if hasattr(state, 'alpha_p'):
        return BN_SNAPSHOT_COLUMNS
    return NSK_SNAPSHOT_COLUMNS


def write_snapshot(stem, state, formats=FORMATS):
    columns = snapshot_columns(state)
    x = np.arange(state.n_points) / float(state.n_points)
    fields = [x] + [getattr(state, name) for name in columns[1:]]
    return write_table(stem, columns, zip(*fields), formats)


def write_trajectory(directory, traj, formats=FORMATS):
    """Snapshots, their index and the diagnostics of one run."""
    formats = check_formats(formats)
    if not os.path.isdir(directory):
        os.makedirs(directory)
    index = []
    for k, state in enumerate(traj.snapshots):
        name = 'snapshot_{:05d}'.format(k)
        write_snapshot(os.path.join(directory, name), state, formats)
        index.append((k, state.t, '{}.{}'.format(name, formats[0])))
    write_table(os.path.join(directory, 'snapshots'), ('index', 't', 'file'), index,
                formats)
    write_diagnostics(directory, traj.records, formats)
    logger.info("wrote %d snapshots and %d diagnostics records to %s",
                len(traj.snapshots), len(traj.records), directory)


def write_diagnostics(directory, records, formats=FORMATS):
    write_table(os.path.join(directory, 'diagnostics'), CSV_COLUMNS,
                (r.as_row() for r in records), formats)
    write_table(os.path.join(directory, 'diagnostics_extra'), EXTRA_COLUMNS,
                ([getattr(r, k) for k in EXTRA_COLUMNS] for r in records), formats)


def read_diagnostics(directory):
    """Records back from the diagnostics table (and the extras when present)."""
    header, rows = _float_table(os.path.join(directory, 'diagnostics'))
    if tuple(header) != CSV_COLUMNS:
        raise ValueError("unexpected diagnostics columns {}".format(header))
    extras = [[r[0], 0.0, 0.0] for r in rows]
    try:
        _, extras = _float_table(os.path.join(directory, 'diagnostics_extra'))
    except ConfigError:
        logger.debug("no diagnostics extras in %s", directory)
    return [DiagnosticsRecord(c_grad_sup=e[1], closure_drift=e[2],
                              **dict(zip(CSV_COLUMNS, row)))
            for row, e in zip(rows, extras)]


def read_snapshots(directory):
    """``(t, {column: array})`` for every snapshot listed in the index."""
    _, index = read_table(os.path.join(directory, 'snapshots'))
    out = []
    for k, t, name in index:
        stem = os.path.splitext(os.path.join(directory, name))[0]
        header, rows = _float_table(stem)
        table = np.array(rows)
        out.append((float(t), {col: table[:, j] for j, col in enumerate(header)}))
    return out


def write_member_tables(directory, report, n, dictionary, formats=FORMATS):
    """Distances, velocity errors and measure pairings of one family member."""
    if not os.path.isdir(directory):
        os.makedirs(directory)
    traj = report.members[n]
    write_table(os.path.join(directory, 'distances'), DISTANCE_COLUMNS,
                zip(report.times, report.distances[n], report.wasserstein[n]),
                formats)
    write_table(os.path.join(directory, 'u_errors'), U_ERROR_COLUMNS,
                zip(report.times, report.u_errors[n]), formats)
    box = dictionary.support_box
    pair_rows = ([s.t] + measures.pairings(
        measures.empirical_from_state(s.rho, support_box=box), dictionary).tolist()
        for s in traj.snapshots)
    write_table(os.path.join(directory, 'measures'), ['t'] + dictionary.labels,
                pair_rows, formats)


def write_convergence(stem, report, formats=FORMATS):
    """``n, sup_t_measure_dist, sup_t_u_err`` then the per-snapshot series."""
    k = len(report.times)
    header = (['n', 'sup_t_measure_dist', 'sup_t_u_err']
              + ['dist_{:03d}'.format(i) for i in range(k)]
              + ['u_err_{:03d}'.format(i) for i in range(k)])
    rows = []
    for n in report.completed:
        rows.append([n, report.sup_distance[n], report.sup_u_error[n]]
                    + list(report.distances[n]) + list(report.u_errors[n]))
    return write_table(stem, header, rows, formats)
