# Use Numba if available and not disabled. Otherwise fall back to numpy.
#
# Set RECENTERING_DISABLE_NUMBA=1 to force the pure-numpy path; this is read
# once at import time.

import logging
import os

logger = logging.getLogger(__name__)

_DISABLED = os.environ.get("RECENTERING_DISABLE_NUMBA", "").strip().lower() in {
    "1", "true", "yes", "on"}

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _DISABLED

if HAVE_NUMBA:
    njit = numba.njit
else:  # pragma: no cover
    def njit(pyfunc=None, **kwargs):
        '''Null decorator when numba is missing.'''
        def wrap(func):
            return func
        return wrap if pyfunc is None else wrap(pyfunc)

if _DISABLED:
    logger.debug("numba disabled by RECENTERING_DISABLE_NUMBA")


def backend():
    """Name of the active kernel backend, ``'numba'`` or ``'numpy'``."""
    return "numba" if USE_NUMBA else "numpy"
