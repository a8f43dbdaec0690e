from mtft._core import *  # noqa: F401,F403
from mtft._core import __doc__  # noqa: F401
