from ._corl import *  # noqa: F401,F403
from ._corl import __doc__  # noqa: F401
