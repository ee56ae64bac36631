"""Plain-text experiment configuration: `key = value` lines, strict keys.

The file format is intentionally dumb: one assignment per line, `#` starts a
comment, every key must be a known field of :class:`SimConfig`, and unknown or
duplicate keys are errors rather than silent typo sinks. Defaults reproduce
the standard benchmark flight, so an empty config is a valid one.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

__all__ = ["ConfigError", "SimConfig", "load_config", "parse_config"]


class ConfigError(ValueError):
    """Raised for unparseable, unknown, or infeasible configuration."""


@dataclass
class SimConfig:
    """Every knob of the simulated flight, drift model, and fusion pipeline."""

    # Flight: a straight lead-out leg (36% of the path), a 90-degree
    # connecting turn, then a wide orbit around the start point, flown at
    # constant speed. turn_radius_m is the connecting turn only; the orbit
    # radius follows from the lead length.
    length_m: float = 2500.0
    duration_s: float = 200.0
    rate_hz: float = 20.0
    speed_mps: float | None = None  # derived from length/duration when omitted
    turn_radius_m: float = 60.0
    straight_init_m: float = 100.0
    alt_base_m: float = 150.0
    alt_amp_m: float = 30.0
    alt_period_s: float = 120.0
    tilt_base_deg: float = 10.0
    tilt_amp_deg: float = 6.0
    tilt_period_s: float = 80.0

    # Visual odometry drift, per prediction step. The scale error dominates
    # by design: it is deterministic given the path, which keeps the
    # dead-reckoned RMSE inside its calibration band seed after seed.
    vo_scale_error: float = 0.165
    vo_pos_noise_m: float = 0.02
    vo_rot_noise_deg: float = 0.04
    vo_bias_walk_m: float = 0.0001

    # Filter schedule and tuning.
    correction_hz: float = 1.0
    k_candidates: int = 9
    process_noise_var: float = 0.01
    init_cov_var: float = 1.0

    # Matching backends. A small d0 keeps the 1/d weight contrast between
    # near and far candidates strong, which is what lets the scene-only
    # pipeline pull the estimate back toward the true scene center.
    d0: float = 5.0
    d_slope: float = 1.0
    d_jitter: float = 5.0
    outlier_prob: float = 0.0
    outlier_factor: float = 3.0
    common_frac: float = 0.8
    scene_altitude_m: float = 150.0
    scene_heading_deg: float = 0.0
    scene_tilt_deg: float = 22.5
    hybrid_horizontal_rms_m: float = 33.86
    hybrid_vertical_rms_m: float = 16.05
    hybrid_heading_rms_deg: float = 31.68
    hybrid_tilt_rms_deg: float = 6.28
    regression_horizontal_rms_m: float = 68.06
    regression_vertical_rms_m: float = 17.32
    regression_heading_rms_deg: float = 70.64
    regression_tilt_rms_deg: float = 7.94

    # Derived quantities -------------------------------------------------

    @property
    def speed(self) -> float:
        return self.length_m / self.duration_s

    @property
    def dt(self) -> float:
        return 1.0 / self.rate_hz

    @property
    def frame_count(self) -> int:
        return int(round(self.duration_s * self.rate_hz))

    @property
    def correction_stride(self) -> int:
        return int(round(self.rate_hz / self.correction_hz))

    @property
    def lead_m(self) -> float:
        """Length of the straight lead-out leg."""
        return 0.36 * self.length_m

    @property
    def orbit_radius_m(self) -> float:
        """Radius of the orbit flown around the start point."""
        return self.lead_m + self.turn_radius_m

    @property
    def orbit_m(self) -> float:
        """Arc length left over for the orbit after the lead and the turn."""
        return self.length_m - self.lead_m - 0.5 * math.pi * self.turn_radius_m

    def validate(self) -> "SimConfig":
        def positive(**named: float) -> None:
            for name, value in named.items():
                if not math.isfinite(value) or value <= 0.0:
                    raise ConfigError(f"{name} must be positive, got {value}")

        def non_negative(**named: float) -> None:
            for name, value in named.items():
                if not math.isfinite(value) or value < 0.0:
                    raise ConfigError(f"{name} must be >= 0, got {value}")

        positive(
            length_m=self.length_m,
            duration_s=self.duration_s,
            rate_hz=self.rate_hz,
            turn_radius_m=self.turn_radius_m,
            alt_period_s=self.alt_period_s,
            tilt_period_s=self.tilt_period_s,
            correction_hz=self.correction_hz,
            init_cov_var=self.init_cov_var,
        )
        non_negative(
            straight_init_m=self.straight_init_m,
            alt_amp_m=self.alt_amp_m,
            tilt_amp_deg=self.tilt_amp_deg,
            vo_pos_noise_m=self.vo_pos_noise_m,
            vo_rot_noise_deg=self.vo_rot_noise_deg,
            vo_bias_walk_m=self.vo_bias_walk_m,
            process_noise_var=self.process_noise_var,
        )
        if self.vo_scale_error <= -1.0 or not math.isfinite(self.vo_scale_error):
            raise ConfigError(
                f"vo_scale_error must be > -1, got {self.vo_scale_error}"
            )
        if self.frame_count < 2:
            raise ConfigError("duration_s * rate_hz must give at least 2 frames")
        if self.speed_mps is not None:
            derived = self.speed
            if abs(self.speed_mps - derived) > 0.02 * derived:
                raise ConfigError(
                    f"speed_mps={self.speed_mps} inconsistent with"
                    f" length_m/duration_s={derived:.3f} (tolerance 2%)"
                )
        if self.alt_base_m - self.alt_amp_m < 100.0 or self.alt_base_m + self.alt_amp_m > 200.0:
            raise ConfigError(
                "altitude profile must stay within [100, 200] m:"
                f" base {self.alt_base_m} +/- {self.alt_amp_m}"
            )
        if self.tilt_base_deg - self.tilt_amp_deg < 0.0 or self.tilt_base_deg + self.tilt_amp_deg > 45.0:
            raise ConfigError(
                "tilt profile must stay within [0, 45] deg:"
                f" base {self.tilt_base_deg} +/- {self.tilt_amp_deg}"
            )
        if self.orbit_m < 0.0:
            raise ConfigError(
                f"turn_radius_m={self.turn_radius_m} leaves no room for the"
                f" orbit (need pi*r/2 <= {0.64 * self.length_m:.1f} m); reduce it"
            )
        if self.straight_init_m > self.lead_m:
            raise ConfigError(
                f"straight_init_m={self.straight_init_m} exceeds the lead leg"
                f" ({self.lead_m:.1f} m)"
            )
        stride = self.rate_hz / self.correction_hz
        if abs(stride - round(stride)) > 1e-9 or round(stride) < 1:
            raise ConfigError(
                f"rate_hz/correction_hz must be a positive integer, got {stride}"
            )
        if self.k_candidates < 1:
            raise ConfigError(f"k_candidates must be >= 1, got {self.k_candidates}")
        if not 0.0 <= self.outlier_prob <= 1.0:
            raise ConfigError(f"outlier_prob must lie in [0, 1], got {self.outlier_prob}")
        if not 0.0 <= self.common_frac < 1.0:
            raise ConfigError(f"common_frac must lie in [0, 1), got {self.common_frac}")
        positive(
            scene_altitude_m=self.scene_altitude_m,
            d0=self.d0,
            hybrid_horizontal_rms_m=self.hybrid_horizontal_rms_m,
            hybrid_vertical_rms_m=self.hybrid_vertical_rms_m,
            hybrid_heading_rms_deg=self.hybrid_heading_rms_deg,
            hybrid_tilt_rms_deg=self.hybrid_tilt_rms_deg,
            regression_horizontal_rms_m=self.regression_horizontal_rms_m,
            regression_vertical_rms_m=self.regression_vertical_rms_m,
            regression_heading_rms_deg=self.regression_heading_rms_deg,
            regression_tilt_rms_deg=self.regression_tilt_rms_deg,
        )
        non_negative(d_slope=self.d_slope, d_jitter=self.d_jitter)
        if not 0.0 <= self.scene_tilt_deg <= 45.0:
            raise ConfigError(
                f"scene_tilt_deg must lie in [0, 45], got {self.scene_tilt_deg}"
            )
        return self


_INT_FIELDS = {"k_candidates"}
_FIELD_NAMES = {f.name for f in dataclasses.fields(SimConfig)}


def parse_config(text: str, source: str = "<config>") -> SimConfig:
    """Parse `key = value` lines into a validated SimConfig."""
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value_text = line.partition("=")
        key = key.strip()
        value_text = value_text.strip()
        if key not in _FIELD_NAMES:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            if key in _INT_FIELDS:
                values[key] = int(value_text)
            else:
                values[key] = float(value_text)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from exc
    return SimConfig(**values).validate()


def load_config(path: str) -> SimConfig:
    with open(path, "r", encoding="ascii") as fh:
        return parse_config(fh.read(), source=path)


def describe_defaults() -> str:
    """One `key = value` line per field, for --help output."""
    cfg = SimConfig()
    lines = []
    for f in dataclasses.fields(SimConfig):
        lines.append(f"{f.name} = {getattr(cfg, f.name)}")
    return "\n".join(lines)
