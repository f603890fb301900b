import json

import numpy as np
import pytest

import sigstrength as st
from sigstrength.cli import main
from sigstrength.instrument import BenchPreset, serve

SIM_CONFIG = """
seed = 5
mode = "eq5_with_q"

[adc]
n_bits = 12
v_min = -2.0
v_max = 2.0
f_s = 10000.0
square_law = 1.0

[tone]
kind = "sine"
f_m = 100.0

[am]
f_c = 80000.0
depth = 1.0
v_pk = 0.8

[noise]
kind = "gaussian"
sigma = 0.0015

[simulate]
n_samples = 256

[sweep]
carriers = [40000.0, 60000.0, 80000.0]
powers = [0.4, 0.6, 0.8]
depths = [1.0]
n_samples = 64
"""


@pytest.fixture
def config_path(tmp_path):
    p = tmp_path / "exp.toml"
    p.write_text(SIM_CONFIG)
    return p


def test_simulate_writes_outputs(tmp_path, config_path, capsys):
    out = tmp_path / "run"
    code = main(["simulate", "--config", str(config_path), "--out", str(out)])
    assert code == 0
    printed = capsys.readouterr().out
    assert "q " in printed and "similarity " in printed and "sigma_estimate" in printed
    trace = st.read_trace(f"{out}_trace.csv")
    assert len(trace) == 256
    spectrum_lines = (tmp_path / "run_spectrum.csv").read_text().splitlines()
    assert spectrum_lines[0] == "frequency_hz,magnitude"


def test_simulate_deterministic(tmp_path, config_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", str(config_path), "--out", str(a)]) == 0
    assert main(["simulate", "--config", str(config_path), "--out", str(b)]) == 0
    assert (tmp_path / "a_trace.csv").read_bytes() == (tmp_path / "b_trace.csv").read_bytes()
    assert (tmp_path / "a_spectrum.csv").read_bytes() == (tmp_path / "b_spectrum.csv").read_bytes()


def test_simulate_seed_flag_changes_output(tmp_path, config_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["simulate", "--config", str(config_path), "--out", str(a)])
    main(["simulate", "--config", str(config_path), "--out", str(b), "--seed", "99"])
    assert (tmp_path / "a_trace.csv").read_bytes() != (tmp_path / "b_trace.csv").read_bytes()


def test_simulate_invalid_config_exit_2(tmp_path, capsys):
    p = tmp_path / "bad.toml"
    p.write_text("[adc]\nn_bits = 0\nv_min = 0.0\nv_max = 5.0\nf_s = 100.0\n")
    assert main(["simulate", "--config", str(p)]) == 2
    assert "validation error" in capsys.readouterr().err


def _write_measurements(tmp_path, n_traces=4, n=1024):
    rng = np.random.default_rng(8)
    t = np.arange(n) / 1000.0
    clean = 0.4 * np.sin(2 * np.pi * 100.0 * t)
    paths = []
    for i in range(n_traces):
        tr = st.Trace(clean + rng.normal(0, 0.002, n), 1000.0)
        p = tmp_path / f"m{i}.csv"
        st.write_trace(tr, p)
        paths.append(str(p))
    return paths


ATMEGA_CONFIG = """
seed = 3

[adc]
preset = "atmega328p"
square_law = 1.0

[tone]
kind = "sine"
f_m = 100.0

[am]
f_c = 615200.0
depth = 1.0
v_pk = 2.0

[noise]
kind = "gaussian"
sigma = 0.0015

[simulate]
n_samples = 1538
"""


def test_simulate_preset_demodulates_tone_with_harmonics(tmp_path, capsys):
    cfg = tmp_path / "atmega.toml"
    cfg.write_text(ATMEGA_CONFIG)
    out = tmp_path / "atmega"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    trace = st.read_trace(f"{out}_trace.csv")
    spec = st.spectrum(trace)
    assert spec.peak_frequency(exclude_dc=True) == pytest.approx(100.0)
    floor = float(np.median(spec.magnitudes))
    assert spec.magnitude_at(200.0) > 20 * floor  # demodulation harmonic


def test_analyze_report_schema(tmp_path, config_path, capsys):
    paths = _write_measurements(tmp_path)
    report_path = tmp_path / "report.json"
    code = main(["analyze", *paths, "--config", str(config_path),
                 "--out", str(report_path), "--n-estimation", "2"])
    assert code == 0
    payload = json.loads(report_path.read_text())
    assert 0.0 <= payload["eps_universal"] <= 1.0
    assert "sine" in payload["eps_selective"]
    assert "zero" in payload["eps_selective"]
    assert "validation" in payload["eps_selective"]
    assert payload["mode"] == "eq5_with_q"
    assert payload["eps_universal"] == pytest.approx(
        1.0 - payload["eps_selective"]["zero"], abs=1e-6
    )
    out = capsys.readouterr().out
    assert "eps_universal" in out


def test_analyze_single_trace_usage_error(tmp_path, config_path):
    (p,) = _write_measurements(tmp_path, n_traces=1)
    assert main(["analyze", p, "--config", str(config_path)]) == 2


def test_analyze_mismatched_traces_named(tmp_path, config_path, capsys):
    paths = _write_measurements(tmp_path, n_traces=2)
    odd = tmp_path / "odd.csv"
    st.write_trace(st.Trace(np.zeros(64) + np.arange(64), 500.0), odd)
    code = main(["analyze", *paths, str(odd), "--config", str(config_path),
                 "--out", str(tmp_path / "r.json")])
    assert code == 2
    assert "odd.csv" in capsys.readouterr().err


def test_similarity_command(tmp_path, capsys):
    ideal = st.synthesize(st.ToneSpec("sine", f_m=50.0), 5000.0, 0.2)
    ideal_path = tmp_path / "ideal.csv"
    st.write_trace(ideal, ideal_path)
    shifted = st.Trace(np.roll(ideal.samples, 10), 5000.0)
    m_path = tmp_path / "m.csv"
    st.write_trace(shifted, m_path)
    csv_out = tmp_path / "sim.csv"
    code = main(["similarity", str(m_path), "--ideal", str(ideal_path),
                 "--csv", str(csv_out)])
    assert code == 0
    out = capsys.readouterr().out
    assert "rho" in out and "lag" in out
    rows = csv_out.read_text().strip().splitlines()
    assert rows[0] == "trace,rho,lag"
    _, rho, lag = rows[1].split(",")
    assert float(rho) > 0.99
    # measured trails the ideal by 10 samples, so the ideal's lag is -10
    assert int(lag) == -10


def test_sweep_grid_csv(tmp_path, config_path, capsys):
    out = tmp_path / "grid"
    code = main(["sweep", "--config", str(config_path), "--out", str(out)])
    assert code == 0
    lines = (tmp_path / "grid.csv").read_text().strip().splitlines()
    assert len(lines) == 10  # header + 3x3x1 cells
    assert json.loads((tmp_path / "grid.json").read_text())["cells"]


def test_sweep_empty_axis_exit_2(tmp_path, capsys):
    p = tmp_path / "empty.toml"
    p.write_text(SIM_CONFIG.replace("carriers = [40000.0, 60000.0, 80000.0]",
                                    "carriers = []"))
    assert main(["sweep", "--config", str(p)]) == 2


def test_sweep_remote_unreachable_exit_3(tmp_path, config_path, capsys):
    code = main(["sweep", "--config", str(config_path),
                 "--out", str(tmp_path / "g"), "--remote", "127.0.0.1:1"])
    assert code == 3
    assert "transport error" in capsys.readouterr().err


def test_sweep_remote_matches_local_bytes(tmp_path, config_path):
    cfg = __import__("sigstrength.config", fromlist=["load_config"]).load_config(config_path)
    preset = BenchPreset(adc=cfg.adc, channel=cfg.channel, noise=cfg.noise)
    server = serve(("127.0.0.1", 0), preset)
    try:
        host, port = server.address
        local, remote = tmp_path / "local", tmp_path / "remote"
        assert main(["sweep", "--config", str(config_path), "--out", str(local)]) == 0
        assert main(["sweep", "--config", str(config_path), "--out", str(remote),
                     "--remote", f"{host}:{port}"]) == 0
        assert (tmp_path / "local.csv").read_bytes() == (tmp_path / "remote.csv").read_bytes()
    finally:
        server.close()


def test_serve_requires_adc_section(tmp_path):
    p = tmp_path / "noadc.toml"
    p.write_text("[tone]\nkind = \"sine\"\nf_m = 10.0\n")
    assert main(["serve", "--bind", "127.0.0.1:0", "--config", str(p)]) == 2


def test_bad_address_rejected(config_path):
    assert main(["sweep", "--config", str(config_path), "--remote", "nocolon"]) == 2
