import copy
import json
import logging
import os

logger = logging.getLogger(__name__)

ENV_PREFIX = "RECYKLOS"
DEBUG_CHECKS_ENV = f"{ENV_PREFIX}_DEBUG_CHECKS"

DEFAULT_CONFIG = {
    "solver": {
        "restart": 50,
        "tol": 1e-8,
        "maxit": 1000,
    },
    "recycling": {
        "max_dim": 100,
        "rank_tol": 1e-12,
    },
    "dense": {
        "eig_cap": 500,
        "svd_cap": 500,
        "pencil_cond_max": 1e12,
    },
    "oracle": {
        "max_basis": 300,
        "dense_max": 2000,
    },
    "logging": {
        "level": "INFO",
        "log_dir": "logs",
    },
    "parallel": {
        "shift_jobs": 1,
    },
}


def env_key(section, key):
    return f"{ENV_PREFIX}_{section.upper()}_{key.upper()}"


def _coerce(value, like):
    return value if like is None else type(like)(value)


def debug_checks_enabled(flag=None):
    """
    Resolves whether per-iteration invariant assertions are on.
    :param flag: Explicit override; None defers to RECYKLOS_DEBUG_CHECKS.
    """
    if flag is not None:
        return bool(flag)
    return os.getenv(DEBUG_CHECKS_ENV, "0").strip().lower() in ("1", "true", "yes", "on")


class ConfigLoader:
    """ Loads and validates the library defaults in config/config.json. """

    def __init__(self, config_path="config/config.json"):
        """
        Initializes the config loader.
        :param config_path: Path to the configuration file.
        """
        self.config_path = config_path
        self.config = {}

    def load_config(self):
        """
        Loads the JSON configuration file and fills missing sections from the defaults.
        :return: Dictionary containing the validated configuration.
        """
        if not os.path.exists(self.config_path):
            logger.warning("Configuration file not found: %s. Using defaults.", self.config_path)
            self.config = self._apply_env_overrides(self._default_config())
            return self.config

        try:
            with open(self.config_path, "r", encoding="utf-8") as file:
                loaded = json.load(file)
        except json.JSONDecodeError as e:
            logger.error("Error parsing configuration file %s: %s", self.config_path, e)
            self.config = self._apply_env_overrides(self._default_config())
            return self.config

        if not isinstance(loaded, dict):
            logger.error("Configuration root must be an object: %s", self.config_path)
            self.config = self._apply_env_overrides(self._default_config())
            return self.config

        config = self._default_config()
        for section, defaults in config.items():
            values = loaded.get(section)
            if values is None:
                logger.warning("Missing section '%s' in configuration. Using defaults.", section)
                continue
            if not isinstance(values, dict):
                logger.warning("Section '%s' is not an object. Using defaults.", section)
                continue
            for key, value in values.items():
                if key not in defaults:
                    logger.warning("Unknown configuration key '%s.%s' ignored.", section, key)
                    continue
                try:
                    defaults[key] = type(defaults[key])(value)
                except (TypeError, ValueError):
                    logger.warning("Invalid value %r for '%s.%s'. Using default.", value, section, key)

        logger.info("Configuration loaded successfully from %s", self.config_path)
        self.config = self._apply_env_overrides(config)
        return self.config

    def get_config_value(self, section, key, default=None):
        """
        Retrieves a config value; RECYKLOS_<SECTION>_<KEY> in the environment takes precedence.
        :param section: Configuration section name.
        :param key: Key inside the section.
        :param default: Returned when neither environment nor config define the key.
        """
        if not self.config:
            self.load_config()
        value = self.config.get(section, {}).get(key, default)
        env_value = os.getenv(env_key(section, key))
        if env_value is None:
            return value
        return _coerce(env_value, value)

    def _apply_env_overrides(self, config):
        """
        Replaces every known key that has a RECYKLOS_<SECTION>_<KEY> variable set.
        Values are cast to the type of the default; unparsable ones are skipped.
        """
        for section, values in config.items():
            for key, value in values.items():
                env_value = os.getenv(env_key(section, key))
                if env_value is None:
                    continue
                try:
                    values[key] = _coerce(env_value, value)
                except (TypeError, ValueError):
                    logger.warning("Invalid value %r in %s. Keeping %r.", env_value, env_key(section, key), value)
                    continue
                logger.info("Configuration '%s.%s' overridden from the environment: %r", section, key, values[key])
        return config

    def _default_config(self):
        return copy.deepcopy(DEFAULT_CONFIG)


def load_config(config_path="config/config.json"):
    """ Loads configuration with defaults applied. """
    return ConfigLoader(config_path).load_config()
