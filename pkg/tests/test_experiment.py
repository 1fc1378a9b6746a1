import numpy as np
import pytest

import rdsvar as rv
from rdsvar.errors import DataError
from rdsvar.experiment import REPORT_COLUMNS, _quantile_width


@pytest.fixture(scope="module")
def small_world():
    g = rv.generate_configuration_graph(60, rv.PowerLawDegree(2.2, 2, 10), np.random.default_rng(31))
    g = rv.largest_connected_component(g)
    rng = np.random.default_rng(8)
    cols = {
        "always": np.ones(g.n_nodes, dtype=np.uint8),
        "coin": rng.integers(0, 2, size=g.n_nodes).astype(np.uint8),
    }
    attrs = rv.AttributeTable(list(cols), np.column_stack(list(cols.values())))
    return g, attrs


def design_for(g, n=25, seeds=3):
    return rv.RdsDesign(n_seeds=seeds, max_coupons=3, recruit_count_pmf=(1 / 3, 1 / 6, 1 / 6, 1 / 3), target_n=n)


def test_true_proportion_basics(small_world):
    g, attrs = small_world
    assert rv.true_proportion(g, attrs, "always") == 1.0
    coin = attrs.column("coin")
    assert rv.true_proportion(g, attrs, "coin") == coin.sum() / g.n_nodes
    with pytest.raises(DataError):
        rv.true_proportion(g, attrs, "nope")


def test_quantile_width_constructed_distribution():
    est = np.concatenate([np.full(2500, 0.4), np.full(2500, 0.6)])
    assert _quantile_width(est, 0.95) == pytest.approx(0.2)
    assert _quantile_width(np.full(100, 0.3), 0.95) == 0.0


def test_relative_bias_formula_identity(small_world):
    # rel_bias stored exactly as (mean_var - mse) / mse
    g, attrs = small_world
    cfg = rv.ExperimentConfig(
        design=design_for(g), attributes=("coin",), n_replications=4, n_bootstrap=20,
        master_seed=5, methods=("neighbourhood",), ci_levels=(0.95,), n_width_reference=100,
    )
    rep = rv.run_relative_bias(cfg, g, attrs)
    (row,) = rep.rows
    assert row.rel_bias == (row.mean_boot_var - row.mse) / row.mse
    assert row.coverage is None and row.mean_width is None


def test_degenerate_attribute_full_coverage(small_world):
    g, attrs = small_world
    cfg = rv.ExperimentConfig(
        design=design_for(g), attributes=("always",), n_replications=3, n_bootstrap=10,
        master_seed=7, methods=("neighbourhood", "tree"), ci_levels=(0.95,), n_width_reference=100,
    )
    rep = rv.run_full(cfg, g, attrs)
    for row in rep.rows:
        assert row.coverage == 1.0
        assert row.mean_width == 0.0
        assert row.expected_width == 0.0
        assert row.mse == 0.0
        assert row.rel_bias is None  # undefined marker


def test_smoke_report_shape(small_world):
    g, attrs = small_world
    cfg = rv.ExperimentConfig(
        design=design_for(g), attributes=("always", "coin"), n_replications=2, n_bootstrap=2,
        master_seed=1, n_width_reference=100,
    )
    rep = rv.run_full(cfg, g, attrs)
    assert len(rep.rows) == 2 * 2 * 2  # attrs x methods x levels
    text = rep.to_csv_text()
    header = text.splitlines()[0].split(",")
    assert header == REPORT_COLUMNS
    assert len(text.splitlines()) == 1 + len(rep.rows)
    for row in rep.rows:
        assert 0.0 <= row.coverage <= 1.0
        assert row.mean_width >= 0.0
        assert row.mse >= 0.0


def test_coverage_counts_closed_interval(small_world):
    g, attrs = small_world
    cfg = rv.ExperimentConfig(
        design=design_for(g), attributes=("always",), n_replications=2, n_bootstrap=5,
        master_seed=3, methods=("tree",), ci_levels=(0.5,), n_width_reference=100,
    )
    rep = rv.run_coverage(cfg, g, attrs)
    # degenerate CIs [1,1] contain mu=1 exactly: closed-interval rule
    assert rep.rows[0].coverage == 1.0


def test_worker_determinism(small_world):
    g, attrs = small_world
    cfg = rv.ExperimentConfig(
        design=design_for(g), attributes=("coin",), n_replications=6, n_bootstrap=12,
        master_seed=11, n_width_reference=100,
    )
    serial = rv.run_full(cfg, g, attrs, workers=1)
    parallel = rv.run_full(cfg, g, attrs, workers=3)
    assert serial.to_csv_text() == parallel.to_csv_text()
    assert serial.to_json_dict() == parallel.to_json_dict()


def test_expected_width_op(small_world):
    g, attrs = small_world
    cfg = rv.ExperimentConfig(
        design=design_for(g), attributes=("coin",), n_replications=2, n_bootstrap=2,
        master_seed=13, n_width_reference=150,
    )
    w95 = rv.expected_width(cfg, g, attrs, "coin", 0.95)
    w80 = rv.expected_width(cfg, g, attrs, "coin", 0.80)
    assert 0.0 <= w80 <= w95 <= 1.0


def test_single_resample_serves_all_attributes(small_world):
    # adding more attributes must not change an attribute's results
    g, attrs = small_world
    base = dict(
        design=design_for(g), n_replications=3, n_bootstrap=8, master_seed=21,
        methods=("neighbourhood",), ci_levels=(0.9,), n_width_reference=100,
    )
    solo = rv.run_full(rv.ExperimentConfig(attributes=("coin",), **base), g, attrs)
    both = rv.run_full(rv.ExperimentConfig(attributes=("always", "coin"), **base), g, attrs)
    solo_row = solo.rows[0]
    both_row = next(r for r in both.rows if r.attribute == "coin")
    assert solo_row == both_row


def test_all_replications_starved_raises(tmp_path):
    p = tmp_path / "path.txt"
    p.write_text("a b\nb c\n")
    g = rv.load_edge_list(p)
    design = rv.RdsDesign(
        n_seeds=1, max_coupons=1, recruit_count_pmf=(1.0, 0.0), target_n=3,
        reseed_on_death=False,
    )
    attrs = rv.AttributeTable(["x"], np.array([[1], [0], [1]], dtype=np.uint8))
    cfg = rv.ExperimentConfig(
        design=design, attributes=("x",), n_replications=3, n_bootstrap=5,
        master_seed=1, n_width_reference=100,
    )
    with pytest.warns(UserWarning, match="starved"):
        with pytest.raises(DataError, match="completed"):
            rv.run_coverage(cfg, g, attrs)


def test_config_validation(small_world):
    g, _ = small_world
    with pytest.raises(DataError):
        rv.ExperimentConfig(design=design_for(g), attributes=(), n_replications=5, n_bootstrap=5, master_seed=1)
    with pytest.raises(DataError):
        rv.ExperimentConfig(
            design=design_for(g), attributes=("x",), n_replications=5, n_bootstrap=5,
            master_seed=1, ci_levels=(1.5,),
        )
    with pytest.raises(DataError):
        rv.ExperimentConfig(
            design=design_for(g), attributes=("x",), n_replications=5, n_bootstrap=5,
            master_seed=1, methods=("bogus",),
        )
