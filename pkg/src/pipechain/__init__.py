"""pipechain: tamper-evident replicated ledger for sensor data pipelines."""

__version__ = "0.1.0"
