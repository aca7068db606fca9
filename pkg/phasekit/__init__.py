try:
    from ._version import __version__
except ImportError:
    __version__ = "unknown"


from .eos import Polytropic, VanDerWaals, check_admissibility
from .nsk import PhysicalParams, SolverConfig, nsk_run
from .bn import bn_run
from .config import load_config
from .main import simulate_nsk, simulate_bn, homogenize, check_eos, diagnose

import logging
logger = logging.getLogger('phasekit')
