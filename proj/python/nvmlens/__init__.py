"""Performance analysis toolkit for heterogeneous DRAM/NVM main memory.

Thin wrapper around the compiled extension; everything public lives in
``nvmlens._core`` and is re-exported here.
"""

from nvmlens._core import *  # noqa: F401,F403
from nvmlens._core import __version__  # noqa: F401
