import logging

from rich.console import Console
from rich.logging import RichHandler
from rich.text import Text

PACKAGE_LOGGER = 'lindblad_cptp'


class NoHighlightRichHandler(RichHandler):
    """RichHandler that keeps markup but never auto-highlights numbers and paths."""

    def render_message(self, record, message):
        if self.markup:
            return Text.from_markup(message)
        return Text(message)


def get_logger(name: str = PACKAGE_LOGGER, level: int | str = logging.INFO) -> logging.Logger:
    """
    Attach a rich handler to ``name`` (the package logger by default).

    Library modules only call ``logging.getLogger(__name__)``; the CLI calls this once so their
    records show up on stderr.
    """
    _logger = logging.getLogger(name)
    _logger.setLevel(level)
    _logger.handlers.clear()

    handler = NoHighlightRichHandler(
        level=level,
        console=Console(stderr=True, markup=True),
        show_time=False,
        show_level=True,
        show_path=False,
        markup=True,
        rich_tracebacks=False,
    )
    handler.setFormatter(logging.Formatter(fmt='%(message)s'))
    _logger.addHandler(handler)
    _logger.propagate = False

    return _logger
