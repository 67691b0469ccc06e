"""Fine- versus coarse-grained training of small dense networks.

Thin wrapper around the C++ library; see ``granlab._granlab`` for the full
list of bindings.
"""

from ._granlab import *  # noqa: F401,F403
from ._granlab import __doc__  # noqa: F401

__version__ = "0.1.0"
