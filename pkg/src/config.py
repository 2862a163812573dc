"""
Lab configuration for thick-control-lab.
Single unified configuration with YAML support and environment variable integration.
"""

import os
from dataclasses import dataclass, field, fields, asdict
from typing import Optional

import yaml
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

OUTPUT_ROOT_ENV = "THICKLAB_OUTPUT_ROOT"


def expand_env_vars(value: str) -> str:
    """Expand environment variables in configuration values."""
    if isinstance(value, str) and value.startswith("${") and value.endswith("}"):
        env_var = value[2:-1]
        return os.getenv(env_var, "")
    return value


@dataclass
class OutputConfig:
    """Where and how experiment artifacts are written."""
    root: str = "results"
    csv_digits: int = 17

    def resolved_root(self) -> str:
        """Output root, with the environment override taking precedence."""
        override = os.getenv(OUTPUT_ROOT_ENV, "")
        if override:
            return override
        return expand_env_vars(self.root) or "results"


@dataclass
class NumericsConfig:
    """Tolerances and numerical defaults shared by the lab modules."""
    threshold_slack: float = 1e-12
    eigen_tolerance: float = 1e-10
    orthonormality_tolerance: float = 1e-10
    overflow_guard: float = 40.0
    time_nodes: int = 128
    gramian_stabilization: float = 1e-10
    singular_floor: float = 1e-14
    gramian_flag_ratio: float = 1e-13
    safety_factor: float = 2.0


@dataclass
class LoggingConfig:
    """Logging configuration."""
    level: str = "INFO"
    file: str = "thick_lab.log"
    format: str = "%(asctime)s - %(levelname)s - %(message)s"


@dataclass
class Config:
    """Main lab configuration."""
    output: OutputConfig = field(default_factory=OutputConfig)
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)

    # App settings
    debug: bool = False
    jobs: int = 1

    @classmethod
    def load(cls, config_path: Optional[str] = None) -> 'Config':
        """
        Load configuration from YAML file with environment variable support.

        Args:
            config_path: Path to YAML config file, defaults to 'config.yaml'

        Returns:
            Config instance
        """
        if config_path is None:
            config_path = "config.yaml"

        config_data = {}
        if os.path.exists(config_path):
            with open(config_path, 'r') as f:
                yaml_data = yaml.safe_load(f)
                if yaml_data:
                    config_data = yaml_data

        config = cls()

        for section in ('output', 'numerics', 'logging'):
            if section in config_data and config_data[section]:
                target = getattr(config, section)
                for key, value in config_data[section].items():
                    if hasattr(target, key):
                        if isinstance(value, str):
                            value = expand_env_vars(value)
                        setattr(target, key, _coerce(target, key, value))

        for setting in ('debug', 'jobs'):
            if setting in config_data:
                setattr(config, setting, config_data[setting])

        config._validate()
        return config

    def _validate(self) -> None:
        """Validate configuration settings."""
        for f in fields(self.numerics):
            value = getattr(self.numerics, f.name)
            if value <= 0:
                raise ValueError(f"numerics.{f.name} must be positive, got {value}")
        if self.numerics.time_nodes < 8:
            raise ValueError("numerics.time_nodes must be at least 8")
        if self.output.csv_digits < 1 or self.output.csv_digits > 17:
            raise ValueError("output.csv_digits must lie in [1, 17]")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")
        if self.logging.level.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"Unknown logging level: {self.logging.level}")

    def save(self, config_path: str = "config.yaml") -> None:
        """
        Save configuration to YAML file.

        Args:
            config_path: Path to save YAML config file
        """
        config_dict = {
            'output': asdict(self.output),
            'numerics': asdict(self.numerics),
            'logging': asdict(self.logging),
            'debug': self.debug,
            'jobs': self.jobs,
        }
        config_dict['output']['root'] = f"${{{OUTPUT_ROOT_ENV}}}" if os.getenv(OUTPUT_ROOT_ENV) else self.output.root

        with open(config_path, 'w') as f:
            yaml.dump(config_dict, f, default_flow_style=False, indent=2)


def _coerce(target, key: str, value):
    """YAML reads 1e-12 as a string; cast to the type of the current default."""
    current = getattr(target, key)
    if isinstance(current, bool):
        return bool(value)
    if isinstance(current, int) and not isinstance(value, bool):
        return int(value)
    if isinstance(current, float):
        return float(value)
    return value


# Convenience function for loading config
def load_config(config_path: Optional[str] = None) -> Config:
    """Load configuration from file or fall back to defaults."""
    return Config.load(config_path)
