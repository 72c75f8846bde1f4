import json
import warnings

import numpy as np
import pytest

from cavityvem.study import (
    ConvergenceReport,
    StudyConfig,
    exact_eigenvalues,
    observed_order,
    run_study,
)


# ------------------------------------------------------------ exact spectrum


def test_exact_eigenvalues_of_the_reference_cavity():
    values, labels = exact_eigenvalues(1.0, 1.1, 5)
    assert values == pytest.approx(
        [0.826446, 1.0, 1.826446, 3.305785, 4.0], abs=5e-7
    )
    assert labels == [(0, 1), (1, 0), (1, 1), (0, 2), (2, 0)]


def test_exact_eigenvalues_of_the_unit_square_has_multiplicity():
    values, labels = exact_eigenvalues(1.0, 1.0, 3)
    assert values == pytest.approx([1.0, 1.0, 2.0])
    assert set(labels[:2]) == {(0, 1), (1, 0)}
    assert labels[2] == (1, 1)


def test_exact_eigenvalues_of_a_wide_cavity():
    values, labels = exact_eigenvalues(2.0, 1.0, 1)
    assert values == pytest.approx([0.25])
    assert labels == [(1, 0)]


def test_exact_eigenvalues_are_sorted_and_skip_the_trivial_pair():
    values, labels = exact_eigenvalues(1.0, 1.1, 40)
    assert np.all(np.diff(values) >= 0)
    assert (0, 0) not in labels
    assert len(values) == 40
    # every label reproduces its value
    for v, (n, m) in zip(values, labels):
        assert v == pytest.approx(n**2 / 1.0 + m**2 / 1.1**2, rel=1e-12)


# ------------------------------------------------------------ observed order


def test_observed_order_recovers_a_synthetic_power_law():
    ns = np.array([19, 35, 53, 71])
    values = 2.0 - 3.7 / ns**2
    assert observed_order(ns, values, 2.0) == pytest.approx(2.0, abs=1e-9)


def test_observed_order_on_a_realistic_rounded_sequence():
    ns = [8, 16, 32, 64, 128, 256]
    values = [0.7912, 0.8174, 0.8242, 0.8259, 0.8263, 0.8264]
    order = observed_order(ns, values, (1.0 / 1.1) ** 2)
    assert 1.85 <= order <= 2.05


def test_observed_order_skips_exact_levels_with_a_warning():
    ns = [4, 8, 16]
    values = [1.0 - 1.0 / 16.0, 1.0 - 1.0 / 64.0, 1.0]
    with pytest.warns(UserWarning):
        order = observed_order(ns, values, 1.0)
    assert order == pytest.approx(2.0, abs=1e-9)


def test_observed_order_needs_two_usable_levels():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert np.isnan(observed_order([4], [0.9], 1.0))
        assert np.isnan(observed_order([4, 8], [1.0, 1.0], 1.0))


# ---------------------------------------------------------------- the config


def test_config_normalizes_scalars_and_aliases():
    config = StudyConfig.from_dict(
        {"family": "hex", "n": [4, 8], "sigma": 0.25, "modes": 2}
    )
    assert config.families == ("hex",)
    assert config.levels == (4, 8)
    assert config.sigmas == (0.25,)


def test_config_validation_errors():
    with pytest.raises(ValueError):
        StudyConfig(levels=(8, 8))
    with pytest.raises(ValueError):
        StudyConfig(levels=(16, 8))
    with pytest.raises(ValueError):
        StudyConfig(modes=0)
    with pytest.raises(ValueError):
        StudyConfig(families=("voronoi",))
    with pytest.raises(ValueError):
        StudyConfig.from_dict({"unknown_option": 1})


def test_config_json_round_trip(tmp_path):
    config = StudyConfig(families=("rect", "tri"), levels=(4, 8), sigmas=(0.5, 1.0))
    path = tmp_path / "study.json"
    path.write_text(json.dumps(config.to_dict()))
    assert StudyConfig.from_json(str(path)) == config


# ------------------------------------------------------------------ the runs


@pytest.fixture(scope="module")
def small_report():
    return run_study(StudyConfig(families=("rect",), levels=(4, 8), modes=3))


def test_run_study_values_and_orders(small_report):
    values = small_report.values("rect", 1.0)
    assert values.shape == (2, 3)
    assert values[1, 0] == pytest.approx(0.7912, abs=2e-4)
    exact, _ = exact_eigenvalues(1.0, 1.1, 3)
    assert small_report.exact == pytest.approx(exact)
    orders = small_report.orders("rect", 1.0)
    assert orders.shape == (3,)
    assert np.all((1.5 < orders) & (orders < 2.3))


def test_run_study_records_run_metadata(small_report):
    r = small_report.result("rect", 1.0, 8)
    assert r.family == "rect"
    assert r.n == 8
    assert r.n_dofs == 112
    assert r.kernel_multiplicity == 49
    assert r.method == "dense"
    assert r.seconds >= 0
    with pytest.raises(KeyError):
        small_report.result("rect", 1.0, 5)


def test_report_table_layout(small_report):
    table = small_report.format_table()
    assert "family=rect" in table
    assert "sigma=1" in table
    assert "Order" in table
    assert "exact" in table
    assert "0.826446" in table


def test_report_csv_is_deterministic(tmp_path, small_report):
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    small_report.to_csv(str(p1))
    small_report.to_csv(str(p2))
    assert p1.read_bytes() == p2.read_bytes()
    lines = p1.read_text().strip().splitlines()
    assert lines[0] == "family,sigma,N,n_dofs,mode,computed,exact,abs_error,order"
    assert len(lines) == 1 + 2 * 3  # two levels, three modes
    first = lines[1].split(",")
    assert first[0] == "rect"
    assert int(first[2]) == 4
    assert float(first[6]) == pytest.approx(0.826446, abs=5e-7)


def test_rerunning_the_study_reproduces_the_report(small_report):
    again = run_study(StudyConfig(families=("rect",), levels=(4, 8), modes=3))
    assert np.allclose(
        again.values("rect", 1.0), small_report.values("rect", 1.0), atol=1e-13
    )


def test_single_level_reports_no_order():
    report = run_study(StudyConfig(families=("rect",), levels=(6,), modes=2))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        orders = report.orders("rect", 1.0)
    assert np.all(np.isnan(orders))
    assert "n/a" in report.format_table()


def test_threaded_run_matches_serial(monkeypatch):
    config = StudyConfig(families=("tri",), levels=(2, 4), modes=2)
    serial = run_study(config)
    monkeypatch.setenv("VEM_THREADS", "2")
    threaded = run_study(config)
    assert np.allclose(
        serial.values("tri", 1.0), threaded.values("tri", 1.0), atol=1e-14
    )
