"""Verbose progress logger with indentation and colour.

All output goes to stderr; stdout is left to machine-readable output.
"""

import sys
import time
from contextlib import contextmanager
from datetime import datetime
from enum import Enum
from typing import Iterator, Optional, TextIO

try:
    from colorama import Fore, Style, init

    init(autoreset=True)
    COLORAMA_AVAILABLE = True
except ImportError:
    COLORAMA_AVAILABLE = False


class LogLevel(Enum):
    """Log message levels."""

    DEBUG = 0
    INFO = 1
    SUCCESS = 2
    WARNING = 3
    ERROR = 4


_PREFIXES = {
    LogLevel.DEBUG: "  ..",
    LogLevel.INFO: "  ->",
    LogLevel.SUCCESS: "  [OK]",
    LogLevel.WARNING: "  [WARN]",
    LogLevel.ERROR: "  [ERR]",
}


class VerboseLogger:
    """
    Logger with hierarchical indentation and colour-coded levels.

    WARNING and ERROR are always printed; the other levels only in
    verbose mode.
    """

    def __init__(
        self,
        verbose: bool = True,
        use_colors: bool = True,
        stream: Optional[TextIO] = None,
    ) -> None:
        """
        Initialize the logger.

        Args:
            verbose: Enable verbose output
            use_colors: Use colour-coded output (if colorama available)
            stream: Output stream, stderr by default
        """
        self.verbose = verbose
        self.use_colors = use_colors and COLORAMA_AVAILABLE
        self._stream = stream
        self._indent_level = 0
        self._last_was_progress = False

    @property
    def stream(self) -> TextIO:
        return self._stream if self._stream is not None else sys.stderr

    def _colorize(self, text: str, level: LogLevel) -> str:
        if not self.use_colors:
            return text
        color_map = {
            LogLevel.DEBUG: Fore.CYAN,
            LogLevel.INFO: Fore.WHITE,
            LogLevel.SUCCESS: Fore.GREEN,
            LogLevel.WARNING: Fore.YELLOW,
            LogLevel.ERROR: Fore.RED,
        }
        return f"{color_map[level]}{text}{Style.RESET_ALL}"

    def _emit(self, text: str = "") -> None:
        if self._last_was_progress:
            print(file=self.stream)
        print(text, file=self.stream)
        self._last_was_progress = False

    def _log(self, message: str, level: LogLevel) -> None:
        if not self.verbose and level not in (LogLevel.WARNING, LogLevel.ERROR):
            return
        timestamp = datetime.now().strftime("%H:%M:%S")
        indent = "  " * self._indent_level
        line = f"[{timestamp}] {indent}{_PREFIXES[level]} {message}"
        self._emit(self._colorize(line, level))

    def debug(self, message: str) -> None:
        """Log debug message."""
        self._log(message, LogLevel.DEBUG)

    def info(self, message: str) -> None:
        """Log info message."""
        self._log(message, LogLevel.INFO)

    def success(self, message: str) -> None:
        """Log success message."""
        self._log(message, LogLevel.SUCCESS)

    def warning(self, message: str) -> None:
        """Log warning message."""
        self._log(message, LogLevel.WARNING)

    def error(self, message: str) -> None:
        """Log error message."""
        self._log(message, LogLevel.ERROR)

    def header(self, message: str, char: str = "-") -> None:
        """Print a boxed header."""
        if not self.verbose:
            return
        width = 64
        self._emit()
        self._emit(f"+{char * (width - 2)}+")
        self._emit(f"| {message:<{width - 4}} |")
        self._emit(f"+{char * (width - 2)}+")

    def section(self, message: str) -> None:
        """Start a new section and reset indentation."""
        self.header(message, char="-")
        self._indent_level = 0

    def indent(self) -> None:
        """Increase indentation level."""
        self._indent_level += 1

    def dedent(self) -> None:
        """Decrease indentation level."""
        self._indent_level = max(0, self._indent_level - 1)

    @contextmanager
    def nested(self) -> Iterator[None]:
        """Indent everything logged inside the block."""
        self.indent()
        try:
            yield
        finally:
            self.dedent()

    @contextmanager
    def timed(self, label: str) -> Iterator[dict[str, float]]:
        """
        Time a block and log its wall-clock duration at DEBUG level.

        The yielded dict receives ``seconds`` on exit so callers can keep
        the figure (timings never go into deterministic reports).
        """
        record: dict[str, float] = {}
        start = time.perf_counter()
        try:
            yield record
        finally:
            record["seconds"] = time.perf_counter() - start
            self.debug(f"{label}: {record['seconds']:.3f} s")

    def progress(self, message: str, current: int, total: int) -> None:
        """
        Display an in-place progress bar.

        Args:
            message: Progress message
            current: Current progress value
            total: Total progress value
        """
        if not self.verbose:
            return
        fraction = current / total if total > 0 else 1.0
        bar_length = 40
        filled = int(bar_length * fraction)
        bar = "#" * filled + "." * (bar_length - filled)
        indent = "  " * self._indent_level
        line = f"\r{indent}  -> {message} [{bar}] {int(100 * fraction)}%"
        print(line, end="", file=self.stream, flush=True)
        self._last_was_progress = current < total
        if current >= total:
            print(file=self.stream)

    def banner(self, title: str, version: Optional[str] = None) -> None:
        """Print a banner at the start of a command."""
        if not self.verbose:
            return
        line = "=" * 64
        self._emit()
        self._emit(line)
        self._emit(f"  {title} v{version}" if version else f"  {title}")
        self._emit(line)

    def summary(self, message: str, items: Optional[list[str]] = None) -> None:
        """Print a summary box."""
        if not self.verbose:
            return
        line = "=" * 64
        self._emit()
        self._emit(line)
        self._emit(f"  {message}")
        if items:
            self._emit()
            for item in items:
                self._emit(f"    -> {item}")
        self._emit(line)


_logger: Optional[VerboseLogger] = None


def get_logger(verbose: bool = True, use_colors: bool = True) -> VerboseLogger:
    """
    Get or create the process-wide logger.

    Args:
        verbose: Verbosity used when the logger is first created
        use_colors: Use colour-coded output

    Returns:
        VerboseLogger instance
    """
    global _logger
    if _logger is None:
        _logger = VerboseLogger(verbose=verbose, use_colors=use_colors)
    return _logger


def set_verbose(verbose: bool) -> None:
    """Set verbose mode for the process-wide logger."""
    get_logger().verbose = verbose
