"""Throughput-optimal RF time sharing for mixed RF / hybrid RF-FSO relaying."""

__version__ = "0.1.0"
