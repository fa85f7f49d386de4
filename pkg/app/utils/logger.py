import logging
import sys

import colorlog

from utils.colors import COLORES_LOG

FORMATO = "%(log_color)s%(levelname)-8s%(reset)s %(name)s: %(message)s"
_HANDLER = "ldpc-potential-lab"


def apply_global_logging(verbosity: int = 0) -> logging.Logger:
    """
    Instala un único handler de colorlog en el logger raíz (stderr).

    verbosity 0 → WARNING, 1 → INFO, 2 o más → DEBUG. Llamarla de nuevo
    reemplaza el handler anterior.
    """
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG

    handler = colorlog.StreamHandler(sys.stderr)
    handler.set_name(_HANDLER)
    handler.setFormatter(colorlog.ColoredFormatter(FORMATO, log_colors=COLORES_LOG))

    root = logging.getLogger()
    for old in list(root.handlers):
        if old.get_name() == _HANDLER:
            root.removeHandler(old)
    root.addHandler(handler)
    root.setLevel(level)
    return root
