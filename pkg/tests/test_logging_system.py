import logging
import os
import shutil
import tempfile
import unittest

from utilities.logger import setup_logging


class TestLoggingSystem(unittest.TestCase):
    """ Unit tests for run logging setup """

    @classmethod
    def setUpClass(cls):
        """ Configure logging into a scratch directory """
        cls.log_dir = os.path.join(tempfile.mkdtemp(), "logs")
        cls.logger = setup_logging(cls.log_dir, "DEBUG", console=False)

    @classmethod
    def tearDownClass(cls):
        root = logging.getLogger()
        for handler in root.handlers[:]:
            root.removeHandler(handler)
            handler.close()
        shutil.rmtree(os.path.dirname(cls.log_dir), ignore_errors=True)

    def test_log_file_is_created(self):
        """ Ensure the log directory and a timestamped file exist """
        files = os.listdir(self.log_dir)
        self.assertEqual(len(files), 1, "Exactly one log file should be created")
        self.assertTrue(files[0].startswith("recyklos_") and files[0].endswith(".log"))

    def test_messages_reach_the_file(self):
        """ Ensure module loggers write through the root handlers """
        logging.getLogger("core.krylov_base").debug("🧮 cycle 3 finished")
        for handler in logging.getLogger().handlers:
            handler.flush()
        path = os.path.join(self.log_dir, os.listdir(self.log_dir)[0])
        with open(path, encoding="utf-8") as f:
            content = f.read()
        self.assertIn("core.krylov_base - DEBUG - 🧮 cycle 3 finished", content)

    def test_level_names_are_accepted(self):
        self.assertEqual(logging.getLogger().level, logging.DEBUG)
        self.assertEqual(self.logger.name, "recyklos")


if __name__ == "__main__":
    unittest.main()
