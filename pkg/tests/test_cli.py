"""Config grammar, CLI exit codes, and artifact round-trips."""

import csv

import numpy as np
import pytest

from relharq import cli
from relharq.channel import RatePolicy
from relharq.config import (ConfigError, db_to_linear, load_config,
                            parse_config_text)
from relharq.ltsc import throughput_ltsc

COARSE = """
regime = ltsc
T = 2
P_dB = 0.0
Cmax = 1.0
fading_D.dist = rician
fading_D.rho_dB = 5.0
fading_D.K = 1.0
fading_S.dist = rayleigh
fading_S.rho_dB = 0.0
policy = 1.0,0.2,0.9
mc.sessions = 8000
quad.n = 24
grid.r_max = 3.0
grid.r_step = 0.25
grid.alpha_step = 0.25
grid.refine = 1
"""


def write_cfg(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


class TestConfigGrammar:
    def test_defaults_and_roundtrip(self):
        ec = parse_config_text("")
        assert ec["regime"] == "ltsc" and ec["T"] == 2
        assert ec["mc.sessions"] == 100_000 and ec["out"] == "results"
        again = parse_config_text(ec.render())
        assert again == ec
        assert again.render() == ec.render()

    def test_comments_blanks_and_spacing(self):
        ec = parse_config_text("# header\n\n  T =  3 \n regime=stsc\n")
        assert ec["T"] == 3 and ec["regime"] == "stsc"

    @pytest.mark.parametrize("line, fragment", [
        ("Tmax = 2", "unknown key"),
        ("T = 2\nT = 3", "duplicate"),
        ("regime = fast", "bad value"),
        ("P_dB = much", "bad value"),
        ("Cmax = -1", "outside allowed range"),
        ("mc.sessions = 0", "outside allowed range"),
        ("just a line", "expected `key = value`"),
        ("policy = 1.0,0.2", "bad value"),
        ("policy = 1.0,0.2,1.5", "bad value"),
        ("sweep.values = 1,2", "set sweep.key"),
        ("sweep.key = P_dB", "required when sweep.key"),
        ("sweep.key = out\nsweep.values = 1", "not sweepable"),
        ("sweep.key = T\nsweep.values = 1.5,2", "integers"),
    ])
    def test_rejections_name_the_key(self, line, fragment):
        with pytest.raises(ConfigError, match=fragment):
            parse_config_text(line)

    def test_policy_tuple_forms(self):
        assert parse_config_text("").policy_tuple() is None
        ec = parse_config_text("policy = 1.25, 0.5, 0.75")
        assert ec.policy_tuple() == (1.25, 0.5, 0.75)
        pol = ec.rate_policy()
        assert isinstance(pol, RatePolicy) and float(pol.alpha) == 0.75
        with pytest.raises(ConfigError, match="explicit"):
            parse_config_text("").rate_policy()

    def test_db_enters_only_at_the_boundary(self):
        ec = parse_config_text(
            "P_dB = 3.0\nfading_D.rho_dB = 10.0\nfading_S.dist = pointmass\n"
            "fading_S.value = 0.5\n")
        cfg = ec.system()
        assert cfg.power == pytest.approx(db_to_linear(3.0))
        assert cfg.model_d.mean_power == pytest.approx(10.0)
        assert cfg.model_s.kind == "pointmass" and cfg.model_s.point_value == 0.5

    def test_sweep_points_bind_values(self):
        ec = parse_config_text("sweep.key = Cmax\nsweep.values = 0.5,2.0\n")
        assert ec.sweep_values() == [0.5, 2.0]
        bound = ec.with_value("Cmax", 2.0)
        assert bound["Cmax"] == 2.0 and bound["T"] == ec["T"]


class TestExitCodes:
    def test_unknown_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["transmogrify"])
        assert exc.value.code == 2

    def test_unknown_key_is_config_error(self, tmp_path):
        path = write_cfg(tmp_path, "bogus = 1\n")
        assert cli.main(["analytic", "--config", path]) == 2

    def test_zero_sessions_is_config_error(self, tmp_path):
        path = write_cfg(tmp_path, COARSE)
        assert cli.main(["simulate", "--config", path, "--sessions", "0"]) == 2

    def test_analytic_needs_explicit_tuple(self, tmp_path):
        path = write_cfg(tmp_path, "policy = optimize\n")
        assert cli.main(["analytic", "--config", path,
                         "--out", str(tmp_path)]) == 2

    def test_single_tuple_jobs_reject_lcsit(self, tmp_path):
        path = write_cfg(tmp_path, "policy = 1.0,0.2,0.9\ncsi = lcsit\n")
        assert cli.main(["analytic", "--config", path,
                         "--out", str(tmp_path)]) == 2

    def test_stsc_analytics_need_two_rounds(self, tmp_path):
        path = write_cfg(tmp_path, "regime = stsc\nT = 3\npolicy = 1.0,0.2,0.9\n")
        assert cli.main(["analytic", "--config", path,
                         "--out", str(tmp_path)]) == 2

    def test_figure_rejects_caption_conflicts(self, tmp_path):
        path = write_cfg(tmp_path, "T = 3\n")
        assert cli.main(["figure", "2", "--config", path,
                         "--out", str(tmp_path)]) == 2

    def test_cell_never_emits_nan(self):
        with pytest.raises(cli.NumericalError):
            cli._cell(float("nan"))


FIG_KNOBS = """
quad.n = 12
grid.r_max = 3.0
grid.r_step = 0.5
grid.alpha_step = 0.25
grid.refine = 1
mc.sessions = 4000
"""


class TestArtifacts:
    def test_analytic_matches_library_and_reruns_bitwise(self, tmp_path):
        path = write_cfg(tmp_path, COARSE)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert cli.main(["analytic", "--config", path, "--out", str(out1)]) == 0
        rows = read_rows(out1 / "analytic.csv")
        assert rows[0][:3] == ["eta", "expected_reward", "expected_length"]
        ec = load_config(path)
        rep = throughput_ltsc(ec.system(), ec.rate_policy(), ec.compression(),
                              quad_n=ec["quad.n"])
        assert float(rows[1][0]) == rep.eta

        # the sidecar echo regenerates the CSV byte for byte
        assert cli.main(["analytic", "--config", str(out1 / "analytic.config"),
                         "--out", str(out2)]) == 0
        assert (out1 / "analytic.csv").read_bytes() == \
            (out2 / "analytic.csv").read_bytes()

    def test_csv_is_crlf_terminated(self, tmp_path):
        path = write_cfg(tmp_path, COARSE)
        assert cli.main(["analytic", "--config", path, "--out", str(tmp_path)]) == 0
        raw = (tmp_path / "analytic.csv").read_bytes()
        assert raw.count(b"\r\n") == 2 and not raw.replace(b"\r\n", b"").count(b"\r")

    def test_simulate_workers_do_not_change_bytes(self, tmp_path):
        path = write_cfg(tmp_path, COARSE)
        outs = []
        for tag, workers in (("w1", "1"), ("w3", "3")):
            out = tmp_path / tag
            assert cli.main(["simulate", "--config", path, "--out", str(out),
                             "--workers", workers]) == 0
            outs.append((out / "simulate.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_simulate_sweep_and_headers(self, tmp_path):
        path = write_cfg(tmp_path, COARSE +
                         "sweep.key = P_dB\nsweep.values = 0.0,3.0\n")
        assert cli.main(["simulate", "--config", path, "--out", str(tmp_path)]) == 0
        rows = read_rows(tmp_path / "simulate.csv")
        assert rows[0][0] == "P_dB" and len(rows) == 3
        assert "p2_dec_se_2" in rows[0]
        for row in rows[1:]:
            assert all(np.isfinite(float(c)) for c in row)

    def test_optimize_tuple_reverifies_by_analytic_run(self, tmp_path):
        opt_cfg = write_cfg(tmp_path, COARSE.replace("policy = 1.0,0.2,0.9",
                                                     "policy = optimize"))
        assert cli.main(["optimize", "--config", opt_cfg, "--out", str(tmp_path)]) == 0
        rows = read_rows(tmp_path / "optimize.csv")
        header, by_mode = rows[0], {r[0]: r for r in rows[1:]}
        assert set(by_mode) == {"bc", "sl"}
        bc = dict(zip(header, by_mode["bc"]))
        assert float(by_mode["bc"][header.index("eta")]) >= \
            float(by_mode["sl"][header.index("eta")]) - 1e-12

        ana_cfg = write_cfg(
            tmp_path, COARSE.replace(
                "policy = 1.0,0.2,0.9",
                f"policy = {bc['r1']},{bc['r2']},{bc['alpha']}"),
            name="reverify.cfg")
        out2 = tmp_path / "reverify"
        assert cli.main(["analytic", "--config", ana_cfg, "--out", str(out2)]) == 0
        re_eta = float(read_rows(out2 / "analytic.csv")[1][0])
        assert re_eta == pytest.approx(float(bc["eta"]), abs=1e-9)

    def test_validate_passes_and_reports_recorded_rows(self, tmp_path):
        assert cli.main(["validate", "--out", str(tmp_path),
                         "--sessions", "4000", "--seed", "11"]) == 0
        rows = read_rows(tmp_path / "validate.csv")
        status = [r[-1] for r in rows[1:]]
        assert status.count("fail") == 0 and status.count("pass") > 20
        recorded = [r for r in rows[1:] if r[-1] == "recorded"]
        assert recorded and all(r[-2] == "" for r in recorded)
        variants = {r[3] for r in rows[1:] if r[2] == "stsc"}
        assert variants == {"true", "false"}

    def test_figure_job_writes_caption_bound_csv(self, tmp_path):
        knobs = write_cfg(tmp_path, FIG_KNOBS +
                          "sweep.key = fading_D.rho_dB\nsweep.values = 0.0,10.0\n")
        out = tmp_path / "fig"
        assert cli.main(["figure", "2", "--config", knobs, "--out", str(out)]) == 0
        rows = read_rows(out / "figure2.csv")
        assert rows[0] == ["rho_D_dB", "eta_bc_lcsit", "eta_sl_lcsit",
                           "eta_bc_nolcsit", "eta_sl_nolcsit"]
        assert len(rows) == 3
        for row in rows[1:]:
            eta = [float(c) for c in row[1:]]
            assert eta[0] >= eta[1] - 1e-12   # bc >= sl under lcsit
            assert eta[2] >= eta[3] - 1e-12   # bc >= sl without csi
            assert eta[0] >= eta[2] - 1e-12   # lcsit >= no-lcsit
        echo = (out / "figure2.config").read_text()
        assert "Cmax = 1.0" in echo and "fading_S.rho_dB = 0.0" in echo

        # the sidecar restates the caption, so a rerun from it is byte-identical
        out2 = tmp_path / "fig2"
        assert cli.main(["figure", "2", "--config", str(out / "figure2.config"),
                         "--out", str(out2)]) == 0
        assert (out / "figure2.csv").read_bytes() == \
            (out2 / "figure2.csv").read_bytes()
