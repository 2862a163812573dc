import pytest
import tempfile
import os
from unittest.mock import patch
from src.config import Config, load_config, OutputConfig, NumericsConfig, LoggingConfig, OUTPUT_ROOT_ENV


class TestConfig:
    def test_config_defaults(self):
        """Test that Config initializes with correct default values"""
        config = Config()

        # Output defaults
        assert config.output.root == "results"
        assert config.output.csv_digits == 17

        # Numerics defaults
        assert config.numerics.threshold_slack == 1e-12
        assert config.numerics.eigen_tolerance == 1e-10
        assert config.numerics.orthonormality_tolerance == 1e-10
        assert config.numerics.overflow_guard == 40.0
        assert config.numerics.time_nodes == 128
        assert config.numerics.gramian_stabilization == 1e-10
        assert config.numerics.singular_floor == 1e-14
        assert config.numerics.gramian_flag_ratio == 1e-13
        assert config.numerics.safety_factor == 2.0

        # Logging defaults
        assert config.logging.level == "INFO"
        assert config.logging.file == "thick_lab.log"

        # App defaults
        assert config.debug is False
        assert config.jobs == 1


    def test_numerics_fields(self):
        """Test the numerics section holds only settings the runner reads"""
        assert [f for f in vars(NumericsConfig())] == [
            "threshold_slack", "eigen_tolerance", "orthonormality_tolerance", "overflow_guard",
            "time_nodes", "gramian_stabilization", "singular_floor", "gramian_flag_ratio",
            "safety_factor",
        ]


    def test_load_config_from_yaml(self):
        """Test loading config from YAML file"""
        yaml_content = """
output:
  root: "out"
  csv_digits: 12

numerics:
  threshold_slack: 1.0e-9
  time_nodes: 256

logging:
  level: "DEBUG"

debug: true
jobs: 4
"""

        with tempfile.NamedTemporaryFile(mode='w', suffix='.yaml', delete=False) as f:
            f.write(yaml_content)
            f.flush()

            try:
                config = Config.load(f.name)

                # Verify overridden values
                assert config.output.root == "out"
                assert config.output.csv_digits == 12
                assert config.numerics.threshold_slack == 1e-9
                assert config.numerics.time_nodes == 256
                assert config.logging.level == "DEBUG"
                assert config.debug is True
                assert config.jobs == 4

                # Verify defaults remain for non-overridden values
                assert config.numerics.safety_factor == 2.0
                assert config.logging.file == "thick_lab.log"

            finally:
                os.unlink(f.name)


    def test_yaml_scientific_strings_are_coerced(self):
        """Test that values YAML reads as strings are cast to the field type"""
        yaml_content = """
numerics:
  singular_floor: 1e-14
"""
        with tempfile.NamedTemporaryFile(mode='w', suffix='.yaml', delete=False) as f:
            f.write(yaml_content)
            f.flush()

            try:
                config = Config.load(f.name)
                assert isinstance(config.numerics.singular_floor, float)
                assert config.numerics.singular_floor == 1e-14
            finally:
                os.unlink(f.name)


    def test_environment_variable_expansion(self):
        """Test environment variable expansion in config"""
        yaml_content = """
output:
  root: "${TEST_RESULTS_DIR}"
"""
        with patch.dict('os.environ', {'TEST_RESULTS_DIR': '/tmp/lab-results'}):
            with tempfile.NamedTemporaryFile(mode='w', suffix='.yaml', delete=False) as f:
                f.write(yaml_content)
                f.flush()

                try:
                    config = Config.load(f.name)
                    assert config.output.root == "/tmp/lab-results"
                finally:
                    os.unlink(f.name)


    def test_output_root_override(self):
        """Test that the environment override takes precedence over output.root"""
        config = Config()
        with patch.dict('os.environ', {OUTPUT_ROOT_ENV: '/data/override'}):
            assert config.output.resolved_root() == '/data/override'
        with patch.dict('os.environ', {}, clear=True):
            assert config.output.resolved_root() == 'results'


    def test_load_config_file_not_found(self):
        """Test loading config with non-existent file returns defaults"""
        config = Config.load("/nonexistent/config.yaml")

        # Should return default config
        assert isinstance(config, Config)
        assert config.output.root == "results"


    def test_config_validation(self):
        """Test configuration validation"""
        config = Config()

        # Should not raise with valid config
        config._validate()


    def test_config_validation_rejects_bad_values(self):
        """Test validation names the offending field"""
        config = Config()
        config.numerics.threshold_slack = -1.0
        with pytest.raises(ValueError, match="numerics.threshold_slack"):
            config._validate()

        config = Config()
        config.jobs = 0
        with pytest.raises(ValueError, match="jobs"):
            config._validate()

        config = Config()
        config.logging.level = "LOUD"
        with pytest.raises(ValueError, match="Unknown logging level"):
            config._validate()


    def test_config_save_and_load(self, tmp_path):
        """Test saving and loading configuration"""
        config = Config()
        config.output.csv_digits = 15
        config.numerics.safety_factor = 3.0
        config.jobs = 2

        path = tmp_path / "saved.yaml"
        with patch.dict('os.environ', {}, clear=True):
            config.save(str(path))
            loaded = Config.load(str(path))

        assert loaded.output.csv_digits == 15
        assert loaded.numerics.safety_factor == 3.0
        assert loaded.jobs == 2


    def test_load_config_convenience_function(self):
        """Test load_config convenience function"""
        with patch('src.config.Config.load') as mock_load:
            mock_config = Config()
            mock_load.return_value = mock_config

            result = load_config("test.yaml")

            mock_load.assert_called_once_with("test.yaml")
            assert result == mock_config


class TestConfigSections:
    def test_section_types(self):
        """Test that each section is its own dataclass"""
        config = Config()
        assert isinstance(config.output, OutputConfig)
        assert isinstance(config.numerics, NumericsConfig)
        assert isinstance(config.logging, LoggingConfig)
