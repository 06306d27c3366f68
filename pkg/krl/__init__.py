from . import config  # noqa: F401
from .version import version  # noqa: F401
from .loader import *   # noqa: F401,F403

view_help       = config.view_help
reload          = config.reload
validate        = config.validate
