import os
import re

import yaml
from dotenv import load_dotenv

DEFAULT_CONFIG_PATH = os.path.join(os.path.dirname(__file__), "../config/default_config.yaml")

_ENV_REF = re.compile(r"^\$\{([A-Za-z_][A-Za-z0-9_]*)(?::-(.*))?\}$")


class ConfigError(ValueError):
    """A configuration file is missing, unreadable or holds a value of the wrong type."""


class Config:
    """Solver settings: packaged defaults, overlaid by an optional user YAML file.

    String values of the form ``${VAR}`` or ``${VAR:-fallback}`` are replaced
    from the environment (a ``.env`` file is honored) and re-read as YAML
    scalars, so ``${SEGREGATION_TOL:-1.0e-12}`` yields a float.
    """

    def __init__(self, config_path=None):
        load_dotenv()
        self.path = config_path
        self.config = self._load_config(config_path)

    def _load_config(self, config_path):
        with open(DEFAULT_CONFIG_PATH, "r") as f:
            config = yaml.safe_load(f)
        if config_path:
            try:
                with open(config_path, "r") as f:
                    user_config = yaml.safe_load(f) or {}
            except OSError as e:
                raise ConfigError(f"cannot read config file {config_path}: {e.strerror}") from e
            except yaml.YAMLError as e:
                raise ConfigError(f"{config_path} is not valid YAML: {e}") from e
            if not isinstance(user_config, dict):
                raise ConfigError(f"{config_path} must hold a mapping of sections")
            config = self._deep_update(config, user_config)
        return self._substitute_env_vars(config)

    def _deep_update(self, d, u):
        for k, v in u.items():
            if isinstance(v, dict):
                d[k] = self._deep_update(d.get(k) or {}, v)
            else:
                d[k] = v
        return d

    def _substitute_env_vars(self, obj):
        if isinstance(obj, dict):
            return {k: self._substitute_env_vars(v) for k, v in obj.items()}
        if isinstance(obj, list):
            return [self._substitute_env_vars(i) for i in obj]
        if isinstance(obj, str):
            match = _ENV_REF.match(obj)
            if match:
                name, fallback = match.groups()
                raw = os.getenv(name, fallback)
                if raw is None:
                    return obj
                return yaml.safe_load(raw) if raw.strip() else raw
        return obj

    def get(self, key_path, default=None):
        val = self.config
        for k in key_path.split("."):
            if not isinstance(val, dict):
                return default
            val = val.get(k, None)
            if val is None:
                return default
        return val

    def get_float(self, key_path, default=None):
        return self._typed(key_path, default, float)

    def get_int(self, key_path, default=None):
        return self._typed(key_path, default, int)

    def _typed(self, key_path, default, kind):
        val = self.get(key_path, default)
        if val is None or isinstance(val, bool):
            raise ConfigError(f"'{key_path}' must be a number, got {val!r}")
        try:
            return kind(val)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"'{key_path}' must be a number, got {val!r}") from e
