import sys
import argparse
import yaml
from pathlib import Path
from pydantic import BaseModel
from pydantic_settings import BaseSettings, SettingsConfigDict
from typing import Optional


class RuntimeConfig(BaseModel):
    threads: Optional[int] = None  # None -> every core; MM_THREADS overrides


class LogConfig(BaseModel):
    """Console and artifact logging"""
    verbose: bool = True  # emoji progress lines on stdout
    indent: int = 2  # JSON indentation for metrics/manifests


class GeometryConfig(BaseModel):
    grid_divisor: float = 400.0  # default resolution = bbox diagonal / grid_divisor
    min_resolution: float = 0.01  # meters
    max_rejection_rounds: int = 1000
    row_chunk: int = 64  # Dijkstra sources per worker task

    def default_resolution(self, diagonal: float) -> float:
        return max(diagonal / self.grid_divisor, self.min_resolution)


class SpectralConfig(BaseModel):
    dense_limit: int = 4000  # above this size the partial Lanczos solver is used
    residual_tol: float = 1e-7
    cluster_gap: float = 1e-9


class CalibrationConfig(BaseModel):
    max_condition: float = 1e12


class IngestConfig(BaseModel):
    missing_sentinel: float = 100.0  # "not detected" marker of the public RSSI dataset
    floor_value: float = -105.0  # dBm written in place of the sentinel


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        env_nested_delimiter="__"
    )

    mm_threads: Optional[int] = None
    runtime: RuntimeConfig = RuntimeConfig()
    log: LogConfig = LogConfig()
    geometry: GeometryConfig = GeometryConfig()
    spectral: SpectralConfig = SpectralConfig()
    calibration: CalibrationConfig = CalibrationConfig()
    ingest: IngestConfig = IngestConfig()

    def thread_count(self) -> int:
        """Worker cap for joblib: MM_THREADS wins over runtime.threads, -1 means all cores."""
        value = self.mm_threads if self.mm_threads is not None else self.runtime.threads
        if value is None or value <= 0:
            return -1
        return value

    @classmethod
    def load_from_yaml(cls, yaml_path: Optional[str] = None) -> "Settings":
        """Load settings from a YAML file."""
        if yaml_path is None:
            # add_help=False so the CLI's own parser keeps -h
            parser = argparse.ArgumentParser(add_help=False)
            parser.add_argument('--settings', type=str, default=None, help="Application settings YAML.")
            args, _ = parser.parse_known_args()

            if args.settings:
                yaml_path = args.settings
            else:
                # 1. settings.yaml in the current working directory
                current_dir_config = Path.cwd() / "settings.yaml"
                if current_dir_config.exists():
                    yaml_path = current_dir_config
                else:
                    # 2. config/config.yaml next to this package
                    if getattr(sys, 'frozen', False):
                        base_path = Path(sys._MEIPASS) if hasattr(sys, '_MEIPASS') else Path(sys.executable).parent
                    else:
                        base_path = Path(__file__).parent.parent
                    yaml_path = base_path / "config" / "config.yaml"

        config_path = Path(yaml_path)
        if not config_path.exists():
            print(f"Settings file {config_path} not found, using default settings.")
            return cls()

        try:
            with open(config_path, 'r', encoding='utf-8') as f:
                yaml_data = yaml.safe_load(f)

            if yaml_data is None:
                yaml_data = {}

            return cls(**yaml_data)
        except Exception as e:
            print(f"Failed to load settings file: {e}")
            return cls()


settings = Settings.load_from_yaml()
