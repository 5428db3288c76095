"""sacq: dynamic string-averaging CQ-method for split feasibility problems."""

__version__ = "0.1.0"
