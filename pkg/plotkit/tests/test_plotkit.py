"""Rendering, annotation oracles, determinism, and error paths."""

import os

import numpy as np
import pytest

from plotkit import (
    KINDS,
    DataError,
    MissingColumnError,
    PlotJob,
    REQUIRED,
    read_table,
    render,
)
from plotkit.cli import main

DATA = os.path.join(os.path.dirname(__file__), "data")


def _golden(name):
    return os.path.join(DATA, name)


def _job(kind, out, *names, logy=True):
    return PlotJob(tuple(_golden(n) for n in names), kind, str(out), logy=logy)


GOLDEN_FOR = {
    "energy": "energy_synthetic.csv",
    "envelope": "energy_synthetic.csv",
    "residual": "residual_halving.csv",
    "attract": "attract_decay.csv",
}


# ---------------------------------------------------------------------------
# table parsing
# ---------------------------------------------------------------------------


def test_read_table_columns_and_nan():
    table = read_table(_golden("audit_nan_envelope.csv"))
    assert set(REQUIRED["energy"]) <= set(table)
    assert len(table["t"]) == 6
    assert np.all(np.isnan(table["envelope_rhs"]))
    assert table["E"][0] == pytest.approx(0.81)


@pytest.mark.parametrize(
    "content, message",
    [
        ("", "empty file"),
        ("t,E,envelope_rhs\n", "no data rows"),
        ("t,t,E\n1,2,3\n", "duplicate column"),
        ("t,E\n1.0\n", "expected 2 cells"),
        ("t,E\n1.0,oops\n", "non-numeric"),
    ],
)
def test_read_table_rejects_malformed(tmp_path, content, message):
    path = tmp_path / "bad.csv"
    path.write_text(content)
    with pytest.raises(DataError, match=message):
        read_table(path)


# ---------------------------------------------------------------------------
# rendering basics
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("kind", KINDS)
def test_each_kind_renders_golden(tmp_path, kind):
    out = tmp_path / f"{kind}.png"
    render(_job(kind, out, GOLDEN_FOR[kind]))
    assert out.exists() and out.stat().st_size > 0


def test_minimal_two_row_csv_renders(tmp_path):
    path = tmp_path / "tiny.csv"
    path.write_text("t,dist\n0.0,1.0\n")
    out = tmp_path / "tiny.png"
    render(PlotJob((str(path),), "attract", str(out)))
    assert out.exists() and out.stat().st_size > 0


def test_multiple_inputs_overlay(tmp_path):
    out = tmp_path / "pair.png"
    info = render(_job("energy", out, "energy_synthetic.csv", "audit_nan_envelope.csv"))
    assert out.exists() and "rate" in info


def test_linear_axis_option(tmp_path):
    a = tmp_path / "log.png"
    b = tmp_path / "lin.png"
    render(_job("attract", a, "attract_decay.csv"))
    render(_job("attract", b, "attract_decay.csv", logy=False))
    assert a.read_bytes() != b.read_bytes()


def test_unknown_kind_rejected(tmp_path):
    with pytest.raises(DataError, match="unknown plot kind"):
        PlotJob((_golden("energy_synthetic.csv"),), "volume", str(tmp_path / "x.png"))
    with pytest.raises(DataError, match="at least one input"):
        PlotJob((), "energy", str(tmp_path / "x.png"))


# ---------------------------------------------------------------------------
# annotation oracles
# ---------------------------------------------------------------------------


def test_energy_rate_annotation_matches_synthetic_slope(tmp_path):
    # golden series is 2 exp(-3 t): the fitted rate must say 3 within 1%
    info = render(_job("energy", tmp_path / "e.png", "energy_synthetic.csv"))
    assert info["rate"] == pytest.approx(3.0, rel=0.01)


def test_energy_rate_arbitrary_slope(tmp_path):
    t = np.arange(40) * 0.05
    k_true = 1.7
    path = tmp_path / "synth.csv"
    rows = "".join(f"{float(ti)!r},{float(np.exp(-k_true * ti))!r},nan\n" for ti in t)
    path.write_text("t,E,envelope_rhs\n" + rows)
    info = render(PlotJob((str(path),), "energy", str(tmp_path / "s.png")))
    assert info["rate"] == pytest.approx(k_true, rel=0.01)


def test_residual_order_annotation(tmp_path):
    # exact halving data: observed order must be 1
    info = render(_job("residual", tmp_path / "r.png", "residual_halving.csv"))
    assert info["order"] == pytest.approx(1.0, rel=1e-9)


def test_envelope_margin_annotation(tmp_path):
    info = render(_job("envelope", tmp_path / "m.png", "energy_synthetic.csv"))
    table = read_table(_golden("energy_synthetic.csv"))
    assert info["min_margin"] == pytest.approx(
        float(np.min(table["envelope_rhs"] - table["E"])), rel=1e-12
    )
    # rhs and E coincide at t = 0 and the rhs decays slower, so the
    # tightest point is the anchor itself
    assert info["min_margin"] == 0.0


def test_attract_drop_annotation(tmp_path):
    info = render(_job("attract", tmp_path / "a.png", "attract_decay.csv"))
    assert info["drop"] == 0.0  # final golden row is exactly zero


# ---------------------------------------------------------------------------
# error paths
# ---------------------------------------------------------------------------


def test_missing_column_names_the_column(tmp_path):
    path = tmp_path / "partial.csv"
    path.write_text("t,kinetic\n0.0,1.0\n")
    with pytest.raises(MissingColumnError, match="'E'"):
        render(PlotJob((str(path),), "energy", str(tmp_path / "x.png")))


def test_envelope_kind_requires_finite_envelope(tmp_path):
    with pytest.raises(DataError, match="no finite"):
        render(_job("envelope", tmp_path / "x.png", "audit_nan_envelope.csv"))


def test_no_output_written_on_failure(tmp_path):
    out = tmp_path / "never.png"
    path = tmp_path / "partial.csv"
    path.write_text("t,dist\nnot,numbers\n")
    with pytest.raises(DataError):
        render(PlotJob((str(path),), "attract", str(out)))
    assert not out.exists()


# ---------------------------------------------------------------------------
# determinism
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("kind", KINDS)
def test_rendering_is_byte_deterministic(tmp_path, kind):
    a = tmp_path / "a.png"
    b = tmp_path / "b.png"
    render(_job(kind, a, GOLDEN_FOR[kind]))
    render(_job(kind, b, GOLDEN_FOR[kind]))
    assert a.read_bytes() == b.read_bytes()


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------


def _run(*argv):
    try:
        return main(list(argv))
    except SystemExit as exc:  # argparse failure paths
        return exc.code


def test_cli_renders(tmp_path, capsys):
    out = tmp_path / "cli.png"
    code = _run("energy", "--in", _golden("energy_synthetic.csv"), "--out", str(out))
    assert code == 0
    assert out.exists() and out.stat().st_size > 0
    assert "rate" in capsys.readouterr().out


def test_cli_matches_library_bytes(tmp_path):
    lib = tmp_path / "lib.png"
    cli = tmp_path / "cli.png"
    render(_job("residual", lib, "residual_halving.csv"))
    assert _run("residual", "--in", _golden("residual_halving.csv"),
                "--out", str(cli)) == 0
    assert lib.read_bytes() == cli.read_bytes()


def test_cli_linear_flag(tmp_path):
    out = tmp_path / "lin.png"
    code = _run("attract", "--in", _golden("attract_decay.csv"),
                "--out", str(out), "--linear")
    assert code == 0 and out.exists()


def test_cli_missing_column_exit(tmp_path, capsys):
    path = tmp_path / "partial.csv"
    path.write_text("t,kinetic\n0.0,1.0\n")
    code = _run("energy", "--in", str(path), "--out", str(tmp_path / "x.png"))
    assert code == 1
    assert "'E'" in capsys.readouterr().err


def test_cli_missing_file_exit(tmp_path, capsys):
    code = _run("energy", "--in", str(tmp_path / "nope.csv"),
                "--out", str(tmp_path / "x.png"))
    assert code == 1
    assert "nope.csv" in capsys.readouterr().err


def test_cli_unknown_kind_exit(tmp_path):
    assert _run("volume", "--in", _golden("energy_synthetic.csv"),
                "--out", str(tmp_path / "x.png")) == 1


def test_cli_requires_in_and_out(tmp_path):
    assert _run("energy", "--out", str(tmp_path / "x.png")) == 1
    assert _run("energy", "--in", _golden("energy_synthetic.csv")) == 1
