"""Time-coverage symbolic reachability for time-basic Petri nets."""

__version__ = "0.1.0"
