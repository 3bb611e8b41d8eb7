"""Report, table and diagnostic writers."""

from .report import ReportWriter, normalise, read_gains, round_sig, write_csv, write_json

__all__ = ["ReportWriter", "normalise", "read_gains", "round_sig", "write_csv", "write_json"]
