"""Key=value parsing, run configuration, and initial data builders."""

import numpy as np
import pytest

from nemaflow import (
    Grid,
    RunConfig,
    build_grid,
    build_model,
    divergence,
    initial_state,
    parse_bc,
    parse_forcing,
    random_smooth_state,
)
from nemaflow.config import parse_kv_file, parse_kv_pairs
from nemaflow.errors import ConfigError


def test_parse_kv_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# a comment\nn = 16\ndt=0.001  # trailing comment\n\nseed=9\n")
    assert parse_kv_file(cfg) == {"n": "16", "dt": "0.001", "seed": "9"}


def test_parse_kv_file_rejects_bare_tokens(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("n 16\n")
    with pytest.raises(ConfigError):
        parse_kv_file(cfg)


def test_parse_kv_pairs():
    assert parse_kv_pairs(["a=1", "b = x"]) == {"a": "1", "b": "x"}
    with pytest.raises(ConfigError):
        parse_kv_pairs(["novalue"])


def test_run_config_coercion_and_validation():
    cfg = RunConfig.from_mapping({"n": "24", "dt": "1e-3", "potential": "quadratic"})
    assert cfg.n == 24 and cfg.dt == 1e-3 and cfg.potential == "quadratic"
    with pytest.raises(ConfigError):
        RunConfig.from_mapping({"volume": "1"})
    with pytest.raises(ConfigError):
        RunConfig.from_mapping({"n": "many"})
    with pytest.raises(ConfigError):
        RunConfig.from_mapping({"dt": "-1"})
    with pytest.raises(ConfigError):
        RunConfig.from_mapping({"sample_every": "0"})


def test_n_steps_requires_lattice_t_final():
    assert RunConfig.from_mapping({"dt": "0.25", "t_final": "1.0"}).n_steps() == 4
    assert RunConfig.from_mapping({"t_final": "0"}).n_steps() == 0
    with pytest.raises(ConfigError):
        RunConfig.from_mapping({"dt": "0.3", "t_final": "1.0"}).n_steps()


def test_build_grid_dimensions():
    assert build_grid(RunConfig.from_mapping({"n": "8"})) == Grid.square(8, 1.0)
    g3 = build_grid(RunConfig.from_mapping({"n": "6", "dim": "3", "length": "2.0"}))
    assert g3 == Grid.cube(6, 2.0)
    with pytest.raises(ConfigError):
        build_grid(RunConfig.from_mapping({"dim": "4"}))


def test_build_model_round_trips_specs():
    cfg = RunConfig.from_mapping(
        {
            "nu": "0.5",
            "alpha": "0.25",
            "potential": "quadratic",
            "bc": "dirichlet(1,0,0)",
            "forcing": "vortex(0.3)",
            "stabilization": "1.5",
        }
    )
    params = build_model(cfg)
    assert params.nu == 0.5
    assert params.alpha == 0.25
    assert params.potential.name == "quadratic"
    assert params.bc.kind == "dirichlet"
    np.testing.assert_array_equal(params.bc.g(0.0), [1.0, 0.0, 0.0])
    assert params.forcing.label == "vortex(0.3,0,0)"
    assert params.stabilization == 1.5


def test_parse_forcing_specs():
    assert parse_forcing("zero").label == "zero"
    assert parse_forcing("constant(0.1,0)").label == "constant(0.1,0)"
    assert parse_forcing("periodic(6.28,1,0)").label.startswith("periodic(6.28")
    with pytest.raises(ConfigError):
        parse_forcing("wind")
    with pytest.raises(ConfigError):
        parse_forcing("constant(1)")  # needs one entry per dimension


def test_parse_bc_specs():
    assert parse_bc("neumann").kind == "neumann"
    rot = parse_bc("rotating(3.14)")
    assert rot.kind == "dirichlet"
    np.testing.assert_allclose(rot.g(0.0), [1.0, 0.0, 0.0])
    with pytest.raises(ConfigError):
        parse_bc("slip")


def test_random_smooth_state_is_admissible():
    g = Grid.square(16)
    s = random_smooth_state(g, np.random.default_rng(50))
    assert np.max(np.abs(divergence(s.u))) < 1e-12
    # wall-normal flux vanishes by construction
    assert np.max(np.abs(s.u.comps[0][0])) == 0.0
    assert s.d.max_abs() < 3.0


def test_random_smooth_state_seed_deterministic():
    g = Grid.square(8)
    a = random_smooth_state(g, np.random.default_rng(7))
    b = random_smooth_state(g, np.random.default_rng(7))
    assert a.u.plus(b.u, -1.0).max_abs() == 0.0
    assert a.d.plus(b.d, -1.0).max_abs() == 0.0


def test_initial_state_presets():
    g = Grid.square(8)
    zero = initial_state("zero", g)
    assert zero.u.max_abs() == 0.0 and zero.d.max_abs() == 0.0
    mini = initial_state("minimizer", g)
    assert mini.d.max_abs() == pytest.approx(1.0)
    smooth = initial_state("smooth", g, np.random.default_rng(3))
    assert smooth.u.max_abs() > 0
    with pytest.raises(ConfigError):
        initial_state("chaos", g)
