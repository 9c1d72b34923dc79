from ._compofun import *  # noqa: F401,F403
from ._compofun import __doc__  # noqa: F401
