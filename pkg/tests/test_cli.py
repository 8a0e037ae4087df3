import pytest

from mimo_ofdm_im.cli import build_parser, main, parse_snr, resolve
from mimo_ofdm_im.exceptions import ConfigError


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestParseSnr:
    def test_range(self):
        assert parse_snr("0:5:20") == [0, 5, 10, 15, 20]
        assert parse_snr("0:0.5:1") == [0, 0.5, 1]

    def test_list(self):
        assert parse_snr("3, 7,11") == [3, 7, 11]

    @pytest.mark.parametrize("bad", ["", "a:b:c", "0:-1:10", "10:1:0"])
    def test_bad(self, bad):
        with pytest.raises(ConfigError):
            parse_snr(bad)


class TestResolve:
    def parse(self, *argv):
        return build_parser().parse_args(["info", *argv])

    def test_precedence(self, tmp_path):
        f = tmp_path / "c.cfg"
        f.write_text("nfft = 256  # comment\ncp_len=20\nmodulation=qpsk\n")
        env = {"MIMO_OFDM_IM_NFFT": "128", "MIMO_OFDM_IM_CP_LEN": "12"}
        cfg, _ = resolve(self.parse("--preset", "fig3a", "--config", str(f), "--cp", "16"), env)
        assert cfg.nfft == 128 and cfg.cp_len == 16 and cfg.modulation == "qpsk"

    def test_preset(self):
        cfg, run = resolve(self.parse("--preset", "fig6a"), {})
        assert cfg.channel == "epa" and cfg.n_rx == 4
        assert run["detectors"][-1] == "alamouti/modulation=qam16"

    def test_unknown_env_key(self):
        with pytest.raises(ConfigError):
            resolve(self.parse(), {"MIMO_OFDM_IM_BANDWIDTH": "5"})

    def test_scheme_follows_detector(self):
        cfg, _ = resolve(self.parse("--detector", "vblast_mmse"), {})
        assert cfg.scheme == "vblast"


class TestCommands:
    def test_info(self, capsys):
        code, out, _ = run(capsys, "info")
        assert code == 0 and "1.87 bits/s/Hz" in out

    def test_codec_test(self, capsys):
        code, out, _ = run(capsys, "codec-test", "--samples", "2000")
        assert code == 0 and "FAIL" not in out and out.count("PASS") == 7

    def test_selftest(self, capsys):
        code, out, _ = run(capsys, "selftest")
        assert code == 0 and "FAIL" not in out

    def test_bound_stdout(self, capsys):
        code, out, _ = run(capsys, "bound", "--nfft", "64", "--cp", "9", "--snr", "0,10")
        assert code == 0
        rows = [ln for ln in out.splitlines() if ln and not ln.startswith("#")]
        assert rows[0] == "snr_db,abep" and len(rows) == 3

    def test_simulate_deterministic(self, capsys, tmp_path):
        args = ["simulate", "--nfft", "64", "--cp", "9", "--snr", "0,4", "--max-frames", "16",
                "--chunk-frames", "8", "--detector", "ml,vblast_ml"]
        assert run(capsys, *args, "--out", str(tmp_path / "a"))[0] == 0
        assert run(capsys, *args, "--out", str(tmp_path / "b"), "--workers", "2")[0] == 0
        for name in ("ml.csv", "vblast_ml.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_preset_repeat_identical(self, capsys, tmp_path):
        args = ["simulate", "--preset", "fig3a", "--seed", "7", "--snr", "0,8",
                "--max-frames", "16", "--chunk-frames", "8"]
        for tag in ("a", "b"):
            assert run(capsys, *args, "--out", str(tmp_path / tag))[0] == 0
        names = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
        assert len(names) == 4
        for name in names:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_simulate_needs_out(self, capsys):
        code, _, err = run(capsys, "simulate", "--nfft", "64", "--cp", "9", "--max-frames", "1")
        assert code == 2 and "--out" in err

    @pytest.mark.parametrize("argv", [
        ["info", "--scheme", "alamouti", "--detector", "ml"],
        ["info", "--n", "4", "--k", "6"],
        ["info", "--csi-q", "0"],
        ["bound", "--detector", "vblast_ml"],
    ])
    def test_usage_errors(self, capsys, argv):
        code, _, err = run(capsys, *argv)
        assert code == 2 and "error" in err

    def test_bad_choice_exits(self):
        with pytest.raises(SystemExit):
            main(["info", "--channel", "tdl"])
