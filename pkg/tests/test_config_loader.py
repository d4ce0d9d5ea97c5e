import json
import os
import shutil
import tempfile
import unittest
from unittest import mock

from utilities.config_loader import DEBUG_CHECKS_ENV, DEFAULT_CONFIG, ConfigLoader, debug_checks_enabled, load_config


class TestConfigLoader(unittest.TestCase):
    """ Unit tests for library configuration handling """

    @classmethod
    def setUpClass(cls):
        """ Create a test config file """
        cls.tmp_dir = tempfile.mkdtemp()
        cls.test_config_path = os.path.join(cls.tmp_dir, "config.json")
        cls.sample_config = {
            "solver": {"restart": 30, "tol": 1e-10},
            "recycling": {"max_dim": 20, "unknown_key": 1},
            "logging": {"level": "DEBUG"},
        }
        with open(cls.test_config_path, "w", encoding="utf-8") as f:
            json.dump(cls.sample_config, f, indent=4)

    @classmethod
    def tearDownClass(cls):
        """ Remove the test directory after tests complete """
        shutil.rmtree(cls.tmp_dir, ignore_errors=True)

    def test_load_valid_config(self):
        """ Values from the file override the defaults section by section """
        config = load_config(self.test_config_path)

        self.assertEqual(config["solver"]["restart"], 30, "Restart length should be read from the file")
        self.assertEqual(config["solver"]["maxit"], DEFAULT_CONFIG["solver"]["maxit"], "Missing keys keep defaults")
        self.assertEqual(config["dense"], DEFAULT_CONFIG["dense"], "Missing sections keep defaults")
        self.assertNotIn("unknown_key", config["recycling"], "Unknown keys should be ignored")

    def test_handle_missing_config(self):
        """ A missing file yields the defaults """
        config = load_config(os.path.join(self.tmp_dir, "missing.json"))

        self.assertEqual(config, DEFAULT_CONFIG, "Defaults should be used for a missing configuration file")

    def test_handle_corrupted_config(self):
        """ A corrupted file yields the defaults """
        corrupted_path = os.path.join(self.tmp_dir, "corrupted.json")
        with open(corrupted_path, "w", encoding="utf-8") as f:
            f.write("{invalid_json:}")

        self.assertEqual(load_config(corrupted_path), DEFAULT_CONFIG, "Defaults should replace corrupted files")

    def test_values_are_cast_to_default_types(self):
        """ Integers given as floats and malformed numbers are handled """
        path = os.path.join(self.tmp_dir, "types.json")
        with open(path, "w", encoding="utf-8") as f:
            json.dump({"solver": {"restart": 40.0, "tol": "not a number"}}, f)

        config = load_config(path)
        self.assertIsInstance(config["solver"]["restart"], int)
        self.assertEqual(config["solver"]["tol"], DEFAULT_CONFIG["solver"]["tol"], "Bad values fall back")

    def test_defaults_are_not_shared(self):
        config = load_config(os.path.join(self.tmp_dir, "missing.json"))
        config["solver"]["restart"] = 1
        self.assertEqual(DEFAULT_CONFIG["solver"]["restart"], 50, "Loaded configs must be independent copies")

    def test_environment_overrides_value(self):
        """ RECYKLOS_<SECTION>_<KEY> takes precedence over the file """
        loader = ConfigLoader(self.test_config_path)
        loader.load_config()
        with mock.patch.dict(os.environ, {"RECYKLOS_SOLVER_RESTART": "12"}):
            self.assertEqual(loader.get_config_value("solver", "restart"), 12)
        self.assertEqual(loader.get_config_value("solver", "restart"), 30)
        self.assertEqual(loader.get_config_value("solver", "missing", default="x"), "x")

    def test_environment_overrides_loaded_config(self):
        """ Ensure load_config applies RECYKLOS_<SECTION>_<KEY> with the default's type """
        overrides = {"RECYKLOS_SOLVER_MAXIT": "7", "RECYKLOS_SOLVER_TOL": "1e-3", "RECYKLOS_LOGGING_LEVEL": "ERROR",
                     "RECYKLOS_RECYCLING_MAX_DIM": "many"}
        with mock.patch.dict(os.environ, overrides):
            config = load_config(self.test_config_path)
            defaults = load_config(os.path.join(self.tmp_dir, "missing.json"))

        self.assertEqual(config["solver"]["maxit"], 7)
        self.assertIsInstance(config["solver"]["maxit"], int)
        self.assertEqual(config["solver"]["tol"], 1e-3, "The environment wins over the file")
        self.assertEqual(config["solver"]["restart"], 30, "Keys without a variable keep the file value")
        self.assertEqual(config["logging"]["level"], "ERROR")
        self.assertEqual(config["recycling"]["max_dim"], 20, "Unparsable overrides are skipped")
        self.assertEqual(defaults["solver"]["maxit"], 7, "Overrides also apply without a config file")

    def test_debug_checks_flag(self):
        with mock.patch.dict(os.environ, {DEBUG_CHECKS_ENV: "1"}):
            self.assertTrue(debug_checks_enabled())
            self.assertFalse(debug_checks_enabled(False), "An explicit flag wins over the environment")
        with mock.patch.dict(os.environ, {DEBUG_CHECKS_ENV: "0"}):
            self.assertFalse(debug_checks_enabled())


if __name__ == "__main__":
    unittest.main()
