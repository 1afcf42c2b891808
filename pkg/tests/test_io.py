import csv
import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from chlab import cli, runner
from chlab.config import SweepSpec, dumps, load_config, loads, parse_number
from chlab.core import Grid, ParseError, ValidationError

MINIMAL = """\
[params]
lambda = 0.1
alpha = 0.3

[grid]
half_length = 10pi
n_points = 256

[profile]
kind = gaussian
amplitude = 0.3
"""

ZERO = """\
[params]
lambda = 0.1
[grid]
half_length = 10*pi
n_points = 256
[run]
t_end = 0.3
snapshot_times = 0, 0.3
[profile]
kind = gaussian
amplitude = 0
"""

SWEEP = """\
[params]
alpha = 0.02
beta = 0.03
gamma = 0.04
cap_gamma = 0.01
[grid]
n_points = 1024
[run]
t_end = 6
[profile]
kind = gaussian_derivative
amplitude = -0.84
[sweep]
lambda_rel = 0.25, 0.75, 1.5
"""


def test_minimal_file_gets_defaults(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(MINIMAL)
    cfg = load_config(path)
    assert cfg.sim.params.lam == 0.1 and cfg.sim.params.beta == 0.0
    assert cfg.sim.grid == Grid(10 * math.pi, 256)
    assert cfg.sim.t_end == 5.0 and cfg.sim.dealias_fraction == 0.4
    assert cfg.profile.width == 1.0 and cfg.sweep is None


def test_roundtrip_through_dumps():
    cfg = loads(SWEEP)
    back = loads(dumps(cfg))
    assert (back.sim, back.profile, back.sweep) == (cfg.sim, cfg.profile, cfg.sweep)


def test_pi_multiples():
    assert parse_number("20pi") == 20 * math.pi
    assert parse_number("2.5 * pi") == 2.5 * math.pi
    assert parse_number("-pi") == -math.pi
    assert parse_number("1e-3") == 1e-3


def test_half_dealias_with_quartic_term_is_invalid():
    with pytest.raises(ValidationError) as info:
        loads(MINIMAL.replace("alpha = 0.3", "gamma = 0.1") + "[run]\ndealias_fraction = 0.5\n")
    assert info.value.field == "dealias_fraction"


def test_negative_width_is_invalid():
    with pytest.raises(ValidationError) as info:
        loads(MINIMAL + "width = -1\n")
    assert info.value.field == "width"


@pytest.mark.parametrize("text, line, field", [
    (MINIMAL.replace("alpha = 0.3", "alpah = 0.3"), 3, "alpah"),
    (MINIMAL + "[output]\nformat = csv\n", 12, "output"),
    (MINIMAL.replace("n_points = 256", "n_points = 25.5"), 7, "grid.n_points"),
    (MINIMAL.replace("lambda = 0.1", "lambda = fast"), 2, "params.lambda"),
    (MINIMAL.replace("lambda = 0.1", "lambda = inf"), 2, "params.lambda"),
    (MINIMAL.replace("alpha = 0.3", "lambda = 0.2"), 3, None),
    ("lambda = 1\n" + MINIMAL, 1, None),
])
def test_parse_errors_carry_line_and_field(text, line, field):
    with pytest.raises(ParseError) as info:
        loads(text)
    assert info.value.line == line
    assert info.value.field == field


def test_missing_required_pieces():
    with pytest.raises(ParseError):
        loads("[profile]\nkind = gaussian\n")
    with pytest.raises(ParseError):
        loads("[params]\n[profile]\namplitude = 1\n")


def test_sweep_cells_order_and_empty():
    spec = SweepSpec({"amplitude": [1.0, 2.0], "lambda": [0.1, 0.2]})
    assert spec.cells() == [{"lambda": 0.1, "amplitude": 1.0}, {"lambda": 0.1, "amplitude": 2.0},
                            {"lambda": 0.2, "amplitude": 1.0}, {"lambda": 0.2, "amplitude": 2.0}]
    assert SweepSpec({}).cells() == []
    assert SweepSpec({"lambda": []}).cells() == []
    with pytest.raises(ValidationError):
        loads(SWEEP + "lambda = 0.1\n")


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_zero_data_run(tmp_path):
    summary = runner.run_single(loads(ZERO), tmp_path)
    rows = _rows(tmp_path / "timeseries.csv")
    assert rows[0] == ["t", "h0", "h1", "m_integral", "m_h1", "slope_min", "slope_argmin", "sup_u"]
    assert len(rows) == 1 + 7
    for row in rows[1:]:
        assert all(float(v) == 0 for k, v in zip(rows[0], row) if k not in ("t", "slope_argmin"))
    assert summary["outcome"] == "GlobalWindow"
    assert summary["status"]["kind"] == "ReachedTEnd"
    assert summary["null_reasons"]["certificate.epsilon0"] == "negative_infinity"
    assert sorted(p.name for p in tmp_path.glob("snapshot_*.csv")) == [
        "snapshot_t0.000000.csv", "snapshot_t0.300000.csv"]
    assert _rows(tmp_path / "snapshot_t0.300000.csv")[0] == ["x", "u", "m"]


def _numbers(obj, path=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _numbers(v, f"{path}.{k}" if path else k)
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _numbers(v, f"{path}[{i}]")
    else:
        yield path, obj


def test_summary_fields_finite_or_null_with_reason(tmp_path):
    summary = runner.run_single(loads(MINIMAL + "[run]\nt_end = 0.5\n"), tmp_path,
                                write_flow=True)
    on_disk = json.loads((tmp_path / "summary.json").read_text())
    assert on_disk == summary
    for key in ("schema_version", "software_version", "config", "certificate", "status",
                "final", "decay", "residuals", "transport", "outcome", "wall_clock_seconds",
                "notes", "leakage"):
        assert key in summary
    assert summary["decay"]["h1_deviation"] < 1e-9
    # product truncation at dx = 0.25; below 1e-9 on the default grid
    assert summary["residuals"]["equation"] < 1e-6
    for path, value in _numbers(summary):
        if value is None:
            assert path in summary["null_reasons"]
        elif isinstance(value, float):
            assert math.isfinite(value)
    assert _rows(tmp_path / "flow.csv")[0] == ["seed_index", "t", "seed", "q", "log_qx",
                                               "slope", "m"]


def test_csv_outputs_are_byte_identical(tmp_path):
    cfg = loads(MINIMAL + "[run]\nt_end = 0.5\nsnapshot_times = 0.25\n")
    runner.run_single(cfg, tmp_path / "a", write_flow=True)
    runner.run_single(cfg, tmp_path / "b", write_flow=True)
    for name in ("timeseries.csv", "snapshot_t0.250000.csv", "flow.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


@settings(max_examples=200)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_17_digit_csv_roundtrip(x):
    assert float(runner.fmt(x)) == x


def test_empty_sweep_gives_empty_index(tmp_path):
    path = tmp_path / "s.ini"
    path.write_text(MINIMAL + "[sweep]\n")
    assert cli.main(["sweep", str(path), "--out-dir", str(tmp_path / "out"), "--quiet"]) == 0
    assert _rows(tmp_path / "out" / "index.csv") == [list(runner.INDEX_HEADER)]


def test_sweep_records_failed_cells(tmp_path):
    # a wide profile is rejected at the box edge once its amplitude is large
    cfg = loads(MINIMAL + "width = 5\n[run]\nt_end = 0.2\n[sweep]\namplitude = 0.1, 1000\n")
    rows = runner.run_sweep(cfg, tmp_path)
    assert [r[7] for r in rows] == ["GlobalWindow", "Error"]
    assert (tmp_path / "cells" / "cell_0001" / "error.txt").exists()


@pytest.fixture(scope="module")
def lambda_sweep(tmp_path_factory):
    base = tmp_path_factory.mktemp("sweep")
    cfg = loads(SWEEP)
    runner.run_sweep(cfg, base / "a", threads=3)
    runner.run_sweep(cfg, base / "b", threads=1)
    return base


def test_lambda_sweep_guarantee_region(lambda_sweep):
    rows = _rows(lambda_sweep / "a" / "index.csv")[1:]
    assert [r[0] for r in rows] == ["0", "1", "2"]
    for r in rows:
        lam, lam0 = float(r[1]), float(r[8])
        if lam < lam0 and r[9] == "true":
            assert r[7] == "Broke"
    assert [r[9] for r in rows] == ["true", "true", "false"]


def test_sweep_index_is_reproducible(lambda_sweep):
    a = (lambda_sweep / "a" / "index.csv").read_bytes()
    b = (lambda_sweep / "b" / "index.csv").read_bytes()
    assert a == b


def test_cli_commands(tmp_path, capsys):
    path = tmp_path / "c.ini"
    path.write_text(SWEEP)
    assert cli.main(["certificate", str(path), "--out-dir", str(tmp_path)]) == 0
    cert = json.loads((tmp_path / "certificate.json").read_text())
    assert cert["guaranteed"] is False and cert["condition_holds"] is True
    assert cli.main(["--quiet", "verify-identities", str(path), "--out-dir", str(tmp_path)]) == 0
    ident = json.loads((tmp_path / "identities.json").read_text())
    assert ident["pass"] and ident["sqrt_form"] <= 1e-8
    zero = tmp_path / "z.ini"
    zero.write_text(ZERO)
    assert cli.main(["simulate", str(zero), "--out-dir", str(tmp_path / "z"), "--quiet"]) == 0
    assert (tmp_path / "z" / "summary.json").exists()
    bad = tmp_path / "bad.ini"
    bad.write_text(MINIMAL.replace("alpha", "alhpa"))
    assert cli.main(["simulate", str(bad)]) == 2
    assert "line 3" in capsys.readouterr().err
    assert cli.main(["simulate", str(tmp_path / "missing.ini")]) == 1
    assert cli.main(["--threads", "0", "selftest"]) == 2


def test_cli_selftest():
    assert cli.main(["selftest", "--quiet"]) == 0
