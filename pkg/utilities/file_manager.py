import json
import logging
import os

import pandas as pd

from utilities.error_handler import IoError

logger = logging.getLogger(__name__)


class FileManager:
    """Handles file operations such as reading/writing JSON, CSV, and creating directories."""

    @staticmethod
    def ensure_directory_exists(directory):
        """Ensure that a directory exists, create it if not."""
        if not directory:
            return
        if not os.path.exists(directory):
            try:
                os.makedirs(directory, exist_ok=True)
            except OSError as e:
                raise IoError(f"Cannot create directory {directory}: {e}") from e
            logger.info("📂 Created missing directory: %s", directory)

    @staticmethod
    def load_json(filepath):
        """Load a JSON file; missing or malformed files raise IoError."""
        if not os.path.exists(filepath):
            raise IoError(f"JSON file not found: {filepath}")
        try:
            with open(filepath, "r", encoding="utf-8") as file:
                return json.load(file)
        except json.JSONDecodeError as e:
            raise IoError(f"Failed to parse JSON file {filepath}: {e}") from e
        except OSError as e:
            raise IoError(f"Cannot read {filepath}: {e}") from e

    @staticmethod
    def save_json(filepath, data):
        """Save data to a JSON file with stable key order and indentation."""
        FileManager.ensure_directory_exists(os.path.dirname(filepath))
        try:
            with open(filepath, "w", encoding="utf-8") as file:
                json.dump(data, file, indent=2)
                file.write("\n")
        except OSError as e:
            raise IoError(f"Failed to save JSON file {filepath}: {e}") from e
        logger.info("✅ Saved JSON file: %s", filepath)

    @staticmethod
    def read_csv(filepath):
        """Read a CSV file into a DataFrame."""
        if not os.path.exists(filepath):
            raise IoError(f"CSV file not found: {filepath}")
        try:
            return pd.read_csv(filepath)
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise IoError(f"Error reading CSV file {filepath}: {e}") from e

    @staticmethod
    def save_csv(filepath, df, float_format=None):
        """Save a DataFrame to a CSV file without the index column (floats optionally formatted)."""
        FileManager.ensure_directory_exists(os.path.dirname(filepath))
        try:
            df.to_csv(filepath, index=False, lineterminator="\n", float_format=float_format)
        except OSError as e:
            raise IoError(f"Failed to save CSV file {filepath}: {e}") from e
        logger.info("✅ Saved CSV file: %s", filepath)
