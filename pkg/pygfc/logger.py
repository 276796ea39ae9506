"""
Package logger for pygfc.

All modules log through ``pygfc.logger.logger``. Output goes to stdout,
with the level name coloured for terminals.
"""
import logging
import sys

# ANSI colour codes
color2num = dict(
    gray=30,red=31,green=32,
    yellow=33,blue=34,magenta=35,
    cyan=36,white=37,crimson=38,
)

# Level -> (colour, bold)
LEVEL_COLORS = {
    logging.DEBUG: ("gray", False),
    logging.INFO: ("green", False),
    logging.WARNING: ("yellow", False),
    logging.ERROR: ("crimson", True),
    logging.CRITICAL: ("red", True),
}

def colorize(string: str, color: str, bold: bool = False) -> str:
    """
    Wrap `string` in terminal colour codes.
    `color` must be a key of ``color2num``.
    """
    attrs = [str(color2num[color])]
    if bold:
        attrs.append("1")
    return f"\x1b[{';'.join(attrs)}m{string}\x1b[0m"

class ColoredFormatter(logging.Formatter):
    """
    Formatter printing ``[LEVEL] - message`` with
    a coloured level tag.
    """
    def __init__(self, use_color: bool = True):
        super().__init__(fmt="%(levelname)s: %(message)s")
        self.use_color = use_color
        self._formats = {
            level: self._level_format(level, color, bold)
            for level, (color, bold) in LEVEL_COLORS.items()
        }

    def _level_format(self, level: int, color: str, bold: bool) -> logging.Formatter:
        tag = "[%(levelname)s]"
        if self.use_color:
            tag = colorize(tag, color, bold)
        return logging.Formatter(f"{tag} - %(message)s")

    def format(self, record: logging.LogRecord) -> str:
        fmt = self._formats.get(record.levelno)
        if fmt is None:
            return super().format(record)
        return fmt.format(record)

def set_verbosity(level: int) -> None:
    """
    Change the level of the package logger,
    e.g. ``set_verbosity(logging.DEBUG)``.
    """
    logger.setLevel(level)

# Logger
logger = logging.getLogger("pygfc")
logger.setLevel(logging.INFO)
ch = logging.StreamHandler(sys.stdout)
ch.setFormatter(ColoredFormatter(use_color=sys.stdout.isatty()))
logger.addHandler(ch)
