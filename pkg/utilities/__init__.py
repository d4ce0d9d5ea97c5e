"""
Utilities package: configuration, logging setup, error handling and file I/O.
"""

__all__ = [
    "config_loader",
    "error_handler",
    "file_manager",
    "logger",
]
