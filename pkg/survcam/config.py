"""Run configuration: documented defaults, flat key = value files and overrides."""

import dataclasses
import logging
from dataclasses import dataclass, fields
from typing import Optional

from .errors import UsageError
from .placement import StrategyId
from .security_game import PAYOFF_MODES

logger = logging.getLogger(__name__)


@dataclass
class RunConfig:
    # grid
    min_lat: float = 39.80
    max_lat: float = 40.00
    min_lon: float = 116.25
    max_lon: float = 116.50
    cell_size_m: float = 50.0
    # ingest
    max_speed_mps: float = 42.0
    window_size: int = 5
    deviation_factor: float = 5.0
    min_spread_m: float = 50.0
    max_gap_s: float = 600.0
    tdrive: bool = False
    # placement
    strategy: str = "S1"
    budget: int = 100
    weights_path: Optional[str] = None
    # game
    game_strategies: int = 1000
    game_k: int = 0
    game_seed: int = 0
    payoff_mode: str = "zero_sum"
    # paths
    input_path: Optional[str] = None
    output_dir: str = "."
    seed: int = 0
    # synthetic generator
    synth_vehicles: int = 50
    synth_days: float = 1.0
    synth_interval_s: float = 60.0
    synth_min_speed_mps: float = 5.0
    synth_max_speed_mps: float = 15.0
    synth_home_bias: float = 0.0
    synth_home_radius_blocks: int = 5
    synth_max_pause_s: float = 0.0

    def game_k_for(self, n_targets):
        """Pure strategy size; 0 means one tenth of the targets, rounded up.

        The size never drops below what game_strategies strategies need to
        cover every target.
        """
        k = min(self.game_k, n_targets) if self.game_k > 0 else -(-n_targets // 10)
        return max(k, 1, -(-n_targets // self.game_strategies))

    def validate(self):
        positive = [
            "cell_size_m",
            "max_speed_mps",
            "deviation_factor",
            "max_gap_s",
            "budget",
            "game_strategies",
            "synth_vehicles",
            "synth_days",
            "synth_interval_s",
            "synth_min_speed_mps",
        ]
        for name in positive:
            if not getattr(self, name) > 0:
                raise UsageError(f"{name} must be positive, got {getattr(self, name)}")
        if self.min_spread_m < 0:
            raise UsageError(f"min_spread_m must be non-negative, got {self.min_spread_m}")
        if self.window_size < 3 or self.window_size % 2 == 0:
            raise UsageError(f"window_size must be odd and >= 3, got {self.window_size}")
        if self.game_k < 0:
            raise UsageError(f"game_k must be >= 0, got {self.game_k}")
        if self.synth_max_speed_mps < self.synth_min_speed_mps:
            raise UsageError("synth_max_speed_mps is below synth_min_speed_mps")
        if not 0 <= self.synth_home_bias <= 1:
            raise UsageError(f"synth_home_bias must lie in [0, 1], got {self.synth_home_bias}")
        if self.synth_max_pause_s < 0 or self.synth_home_radius_blocks < 0:
            raise UsageError("synthetic pause and home radius must be non-negative")
        try:
            self.strategy = StrategyId.parse(self.strategy).value
        except ValueError as error:
            raise UsageError(str(error)) from error
        if self.payoff_mode not in PAYOFF_MODES:
            raise UsageError(f"payoff_mode must be one of {PAYOFF_MODES}, got {self.payoff_mode!r}")
        return self

    def updated(self, **overrides):
        """Copy with the given fields replaced; None values leave a field unchanged."""
        known = {f.name for f in fields(self)}
        unknown = sorted(set(overrides) - known)
        if unknown:
            raise UsageError(f"unknown configuration keys {unknown}")
        changes = {k: v for k, v in overrides.items() if v is not None}
        return dataclasses.replace(self, **changes)


def _coerce(field, text):
    kind = field.type
    if kind in (Optional[str], "Optional[str]"):
        return None if text.lower() in ("", "none") else text
    if kind in (bool, "bool"):
        lowered = text.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"{field.name}: {text!r} is not a boolean")
    converter = {int: int, float: float, str: str, "int": int, "float": float, "str": str}[kind]
    try:
        return converter(text)
    except ValueError:
        raise UsageError(f"{field.name}: cannot read {text!r} as {converter.__name__}") from None


def parse_config(text, base=None):
    """Parse `key = value` lines on top of `base` (defaults when None)."""
    by_name = {f.name: f for f in fields(RunConfig)}
    values = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {number}: expected key = value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in by_name:
            raise UsageError(f"config line {number}: unknown key {key!r}")
        values[key] = _coerce(by_name[key], value)
    config = dataclasses.replace(base or RunConfig(), **values)
    return config


def load_config(path, base=None):
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as error:
        raise UsageError(f"cannot read config file {path}: {error}") from error
    logger.debug("read configuration from %s", path)
    return parse_config(text, base)
