"""Config parsing and validation."""

import dataclasses

import pytest

from crossview.config import ConfigError, SimConfig, describe_defaults, load_config, parse_config


def test_defaults_validate():
    cfg = SimConfig().validate()
    assert cfg.frame_count == 4000
    assert cfg.correction_stride == 20
    assert cfg.speed == pytest.approx(12.5)
    assert cfg.dt == pytest.approx(0.05)


def test_derived_flight_geometry():
    cfg = SimConfig()
    assert cfg.lead_m == pytest.approx(900.0)
    assert cfg.orbit_radius_m == pytest.approx(960.0)
    # lead + quarter turn + orbit account for the whole path
    assert cfg.lead_m + 0.5 * 3.141592653589793 * cfg.turn_radius_m + cfg.orbit_m == pytest.approx(
        cfg.length_m
    )


def test_parse_empty_gives_defaults():
    assert parse_config("") == SimConfig()


def test_parse_overrides_and_comments():
    text = """
    # benchmark, shortened
    length_m = 1250   # half length
    duration_s = 100
    k_candidates = 4
    """
    cfg = parse_config(text)
    assert cfg.length_m == 1250.0
    assert cfg.duration_s == 100.0
    assert cfg.k_candidates == 4
    assert isinstance(cfg.k_candidates, int)
    assert cfg.rate_hz == 20.0  # untouched default


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("length_m 1250", "expected 'key = value'"),
        ("lenght_m = 1250", "unknown key"),
        ("length_m = 1250\nlength_m = 900", "duplicate key"),
        ("length_m = fast", "bad value"),
        ("k_candidates = 3.5", "bad value"),
    ],
)
def test_parse_errors(text, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config(text)


def test_parse_error_carries_line_number():
    with pytest.raises(ConfigError, match=r"flight\.cfg:3"):
        parse_config("\n\nbogus = 1\n", source="flight.cfg")


@pytest.mark.parametrize(
    "overrides",
    [
        {"length_m": -1.0},
        {"length_m": float("nan")},
        {"duration_s": 0.0},
        {"rate_hz": 0.0},
        {"alt_base_m": 90.0},                          # dips below 100 m
        {"alt_base_m": 180.0, "alt_amp_m": 30.0},      # peaks above 200 m
        {"tilt_base_deg": 40.0, "tilt_amp_deg": 10.0}, # exceeds 45 deg
        {"tilt_base_deg": 3.0, "tilt_amp_deg": 6.0},   # goes negative
        {"speed_mps": 14.0},                           # 12% off length/duration
        {"correction_hz": 3.0},                        # 20/3 not an integer
        {"correction_hz": 40.0},                       # stride < 1
        {"turn_radius_m": 1200.0},                     # no room left for orbit
        {"straight_init_m": 1000.0},                   # longer than the lead leg
        {"k_candidates": 0},
        {"outlier_prob": 1.5},
        {"common_frac": 1.0},
        {"vo_scale_error": -1.0},
        {"scene_tilt_deg": 50.0},
        {"d0": 0.0},
        {"d_slope": -0.1},
        {"hybrid_horizontal_rms_m": 0.0},
    ],
)
def test_validate_rejects(overrides):
    with pytest.raises(ConfigError):
        SimConfig(**overrides).validate()


def test_speed_mps_within_tolerance_accepted():
    cfg = SimConfig(speed_mps=12.6).validate()
    assert cfg.speed_mps == 12.6


def test_min_frames():
    with pytest.raises(ConfigError, match="at least 2 frames"):
        SimConfig(duration_s=0.05, rate_hz=20.0).validate()


def test_load_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("duration_s = 100\nlength_m = 1250\n")
    cfg = load_config(str(path))
    assert cfg.duration_s == 100.0
    with pytest.raises(ConfigError, match=str(path)):
        path.write_text("nope = 1\n")
        load_config(str(path))


def test_describe_defaults_covers_every_field():
    text = describe_defaults()
    for f in dataclasses.fields(SimConfig):
        assert f.name in text
    # and it round-trips through the parser
    parsed = parse_config(text.replace("None", "12.5"))
    assert parsed.length_m == SimConfig.length_m
