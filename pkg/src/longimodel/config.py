"""Operator configuration: data root, API address, keys, monitor settings.

Precedence: explicit CLI flags, then the LM_DATA_ROOT environment variable,
then the --config file, then defaults.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .monitoring import MonitoringConfig
from .persist import is_writable_dir


@dataclass
class CliConfig:
    data_root: Path = Path("./lm-data")
    host: str = "127.0.0.1"
    port: int = 8340
    api_key: str = "dev-key"
    default_seed: int = 42
    monitoring: MonitoringConfig = field(default_factory=MonitoringConfig)

    def validate(self) -> None:
        if not is_writable_dir(self.data_root):
            raise ConfigError(f"data_root not writable: {self.data_root}")

    @property
    def base_url(self) -> str:
        return f"http://{self.host}:{self.port}"


def load_config(config_path: str | None = None, data_root_flag: str | None = None) -> CliConfig:
    cfg = CliConfig()
    if config_path:
        path = Path(config_path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if "data_root" in doc:
            cfg.data_root = Path(doc["data_root"])
        cfg.host = doc.get("host", cfg.host)
        cfg.port = int(doc.get("port", cfg.port))
        cfg.api_key = doc.get("api_key", cfg.api_key)
        cfg.default_seed = int(doc.get("default_seed", cfg.default_seed))
        mon = doc.get("monitoring", {})
        if mon:
            cfg.monitoring = MonitoringConfig(
                psi_warning=mon.get("psi_warning", 0.1),
                psi_critical=mon.get("psi_critical", 0.2),
                min_drift_window=mon.get("min_drift_window", 100),
                drift_window=mon.get("drift_window", 500),
                retro_window=mon.get("retro_window", 500),
                min_feedback=mon.get("min_feedback", 30),
                auc_drop_margin=mon.get("auc_drop_margin", 0.05),
                interval_s=mon.get("interval_s", 60.0),
            )
    env_root = os.environ.get("LM_DATA_ROOT")
    if env_root:
        cfg.data_root = Path(env_root)
    if data_root_flag:
        cfg.data_root = Path(data_root_flag)
    return cfg
