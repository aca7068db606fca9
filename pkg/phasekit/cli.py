from __future__ import absolute_import, division, print_function
from argparse import ArgumentParser
import json
import logging
import pdb
import sys

from . import main
from .config import load_config
from .utils import AdmissibilityError, BoundsViolation, ConfigError, PhasekitError

logger = logging.getLogger('phasekit')

COMMANDS = ('simulate-nsk', 'simulate-bn', 'homogenize', 'check-eos', 'diagnose')


class InvalidSelection(ConfigError):
    pass


def _init_parser():
    p = ArgumentParser(
        prog='phasekit',
        description="""
Liquid-vapor NSK and BN solvers and the homogenization experiment relating them.
""",
    )
    p.add_argument(
        'command',
        nargs='?',
        choices=COMMANDS,
        help="What to run. 'diagnose' reads the run directory given by --out",
    )
    p.add_argument(
        '-c',
        '--config',
        help="Run file ([section] key = value) or a meta.json of an earlier run",
    )
    p.add_argument(
        '-o',
        '--out',
        help=("Output directory. Defaults to [output].directory of the config "
              "for the run commands"),
    )
    p.add_argument(
        '-V',
        '--version',
        action='store_true',
        default=False,
        help="Print out the version of phasekit and exit"
    )
    p.add_argument(
        '-v',
        '--verbose',
        action='store_true',
        default=False,
        help="Enable debug level logging info from phasekit"
    )
    p.add_argument(
        '-q',
        '--quiet',
        action='store_true',
        default=False,
        help="Turn off all logging from phasekit except errors"
    )
    p.add_argument(
        '--pdb',
        action="store_true",
        help="Enable PDB debugging on exception",
        default=False,
    )
    return p


def _configure_logging(args):
    loglevel = logging.INFO
    if args.quiet:
        loglevel = logging.ERROR
    elif args.verbose:
        loglevel = logging.DEBUG
    # repeated cli() calls in one process share the logger
    for handler in list(logger.handlers):
        if getattr(handler, '_phasekit_cli', False):
            logger.removeHandler(handler)
    stream_handler = logging.StreamHandler()
    stream_handler._phasekit_cli = True
    stream_handler.setLevel(loglevel)
    f = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    formatter = logging.Formatter(f)
    stream_handler.setFormatter(formatter)
    logger.setLevel(loglevel)
    logger.addHandler(stream_handler)


def _dump(obj):
    print(json.dumps(obj, indent=2, sort_keys=True))


def _run(args):
    if args.command == 'diagnose':
        if args.out is None:
            raise InvalidSelection("diagnose needs the run directory as --out")
        report = main.diagnose(args.out)
        _dump(report)
        balance = report.get('balance')
        if balance is not None and not balance['passed']:
            logger.error("balance check failed for %s", args.out)
            return BoundsViolation.exit_code
        return 0

    if args.config is None:
        raise InvalidSelection("{} needs --config".format(args.command))
    config = load_config(args.config)
    logger.debug('config: %s', config.source)

    if args.command == 'check-eos':
        report = main.check_eos(config)
        _dump(report)
        if not report['admissibility']['admissible']:
            raise AdmissibilityError(
                "P~ is not increasing on {}; spinodal {}".format(
                    report['admissibility']['scan_interval'],
                    report['admissibility']['spinodal']))
        return 0

    out = args.out or config['output']['directory']
    logger.info("%s: %s -> %s", args.command, config.source, out)
    if args.command == 'simulate-nsk':
        traj = main.simulate_nsk(config, out)
        _dump(traj.summary())
    elif args.command == 'simulate-bn':
        traj = main.simulate_bn(config, out)
        _dump(traj.summary())
    else:
        report = main.homogenize(config, out)
        _dump(report.summary())
    return 0


def cli(argv=None):
    p = _init_parser()
    args = p.parse_args(argv)
    if args.verbose and args.quiet:
        msg = ("You have enabled both verbose mode (--verbose or -v) and "
               "quiet mode (-q or --quiet).  Please pick one. Exiting...")
        raise InvalidSelection(msg)

    if args.pdb:
        # set the pdb_hook as the except hook for all exceptions
        def pdb_hook(exctype, value, traceback):
            pdb.post_mortem(traceback)
        sys.excepthook = pdb_hook

    _configure_logging(args)

    if args.version:
        from . import __version__
        print(__version__)
        return 0

    if args.command is None:
        p.print_usage()
        logger.error("a command is required: one of %s", ', '.join(COMMANDS))
        return ConfigError.exit_code

    try:
        return _run(args)
    except PhasekitError as e:
        if args.pdb:
            raise
        logger.error("%s failed (exit code %d): %s", args.command, e.exit_code, e)
        return e.exit_code
