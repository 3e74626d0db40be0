import pytest

from bhdsim import defaults
from bhdsim.config import (
    ConfigError,
    build_run_config,
    load_key_value_file,
    parse_bool,
    parse_freq_hz,
    parse_power_dbm,
    parse_power_w,
    parse_time_s,
    write_key_value_file,
)


class TestQuantityParsing:
    def test_power_dbm(self):
        assert parse_power_dbm("10.9") == 10.9
        assert parse_power_dbm("-38dBm") == -38.0
        assert parse_power_dbm("1mW") == pytest.approx(0.0)
        assert parse_power_dbm("100uW") == pytest.approx(-10.0)

    def test_power_watts(self):
        assert parse_power_w("12.3mW") == pytest.approx(12.3e-3)
        assert parse_power_w("0dBm") == pytest.approx(1e-3)
        assert parse_power_w("2.5e-3") == 2.5e-3

    def test_time(self):
        assert parse_time_s("10ps") == pytest.approx(10e-12)
        assert parse_time_s("1.5ns") == pytest.approx(1.5e-9)
        assert parse_time_s("2e-12") == 2e-12

    def test_freq(self):
        assert parse_freq_hz("750MHz") == 750e6
        assert parse_freq_hz("1GHz") == 1e9
        assert parse_freq_hz("120e6") == 120e6

    def test_bool(self):
        assert parse_bool("true") and parse_bool("1") and parse_bool("yes")
        assert not parse_bool("false") and not parse_bool("off")

    def test_rejects_garbage(self):
        with pytest.raises(ConfigError):
            parse_power_dbm("10 furlongs")
        with pytest.raises(ConfigError):
            parse_time_s("fast")
        with pytest.raises(ConfigError):
            parse_bool("maybe")


class TestKeyValueFile:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "c.cfg"
        write_key_value_file(path, {"a.b": 1.5, "c.d": "hello", "e.f": True},
                             header="test file")
        entries = load_key_value_file(path)
        assert entries == {"a.b": "1.5", "c.d": "hello", "e.f": "true"}

    def test_comments_and_blanks(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("# comment\n\nreceiver.responsivity = 0.9 # inline\n")
        assert load_key_value_file(path) == {"receiver.responsivity": "0.9"}

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("not a key value pair\n")
        with pytest.raises(ConfigError):
            load_key_value_file(path)


class TestPrecedence:
    def test_defaults(self):
        run = build_run_config()
        assert run.params.coupling_efficiency == 0.84
        assert run.params.arm_responsivity_mismatch == defaults.CMRR_MISMATCH
        assert run.calibration.noise_corner_hz == defaults.NOISE_CORNER_HZ
        assert run.modem.penalty_db == defaults.QPSK_PENALTY_DB

    def test_file_overrides_default(self):
        run = build_run_config(file_entries={"receiver.coupling_efficiency": "0.80"})
        assert run.params.coupling_efficiency == 0.80

    def test_flag_overrides_file(self):
        run = build_run_config(
            file_entries={"receiver.coupling_efficiency": "0.80",
                          "link.beta": "0.95"},
            overrides={"receiver.coupling_efficiency": "0.82"},
        )
        assert run.params.coupling_efficiency == 0.82
        assert run.link.beta == 0.95
        assert run.sources["receiver.coupling_efficiency"] == "flag"
        assert run.sources["link.beta"] == "config-file"

    def test_per_field_precedence_sample(self):
        cases = {
            "receiver.tia_bandwidth": ("700MHz", lambda r: r.params.tia_bandwidth, 700e6),
            "calibration.compression_exponent": ("0.5", lambda r: r.calibration.compression_exponent, 0.5),
            "modem.lo_dbm": ("10", lambda r: r.modem.lo_power_w, 0.01),
            "link.detection_loss_db": ("1.0", lambda r: r.link.detection_loss_db, 1.0),
        }
        for key, (text, getter, want) in cases.items():
            run = build_run_config(file_entries={key: text})
            assert getter(run) == pytest.approx(want), key

    def test_calibrated_mismatch_flows_to_receiver(self):
        run = build_run_config(file_entries={"calibration.cmrr_mismatch": "0.02"})
        assert run.params.arm_responsivity_mismatch == 0.02
        # explicit receiver value wins over the calibration default
        run = build_run_config(file_entries={
            "calibration.cmrr_mismatch": "0.02",
            "receiver.arm_responsivity_mismatch": "0.005",
        })
        assert run.params.arm_responsivity_mismatch == 0.005

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            build_run_config(file_entries={"receiver.bogus": "1"})

    def test_invalid_value_names_field(self):
        with pytest.raises(ConfigError) as err:
            build_run_config(file_entries={"receiver.coupling_efficiency": "1.7"})
        assert "coupling_efficiency" in str(err.value)

    def test_arm_split(self):
        run = build_run_config(file_entries={"receiver.arm_split": "0.49,0.51"})
        assert run.params.arm_split == (0.49, 0.51)
        with pytest.raises(ConfigError):
            build_run_config(file_entries={"receiver.arm_split": "0.5"})
