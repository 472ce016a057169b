import math

import numpy as np
import pytest

from polefit.errors import ArgumentError
from polefit.freqresp import make_log_grid
from polefit.montecarlo import (
    DispersionSpec,
    classify_stability,
    resolve_workers,
    run_mc,
    save_pole_map_csv,
    scatter_stats,
)
from polefit.synth import CircuitTemplate, ThermalCell


def _simple_template(noise_db=-120.0):
    # single real pole at 2*pi*1 MHz with unit DC contribution
    return CircuitTemplate(
        thermal_cells=(ThermalCell(1.0, 1.0 / (2 * math.pi * 1e6)),),
        direct_term=0.3,
        noise_floor_db=noise_db,
    )


_GRID = make_log_grid(1e4, 1e8, 41)


class TestClassifyStability:
    def test_signs_with_zero_tol(self):
        assert classify_stability([-1.0]) == {"stable": 1, "unstable": 0, "critical": 0}
        assert classify_stability([1.0]) == {"stable": 0, "unstable": 1, "critical": 0}

    def test_critical_strip(self):
        assert classify_stability([0.5 + 1j], critical_tol=1.0) == {
            "stable": 0,
            "unstable": 0,
            "critical": 1,
        }

    def test_partition(self):
        rng = np.random.default_rng(3)
        poles = rng.standard_normal(50) + 1j * rng.standard_normal(50)
        for tol in (0.0, 0.1, 1.0):
            counts = classify_stability(poles, tol)
            assert sum(counts.values()) == 50


class TestDispersionSpec:
    def test_validation(self):
        with pytest.raises(ArgumentError):
            DispersionSpec(relative_sigma=-0.1, iterations=1)
        with pytest.raises(ArgumentError):
            DispersionSpec(iterations=0)
        with pytest.raises(ArgumentError):
            DispersionSpec(distribution="uniform", iterations=1)


class TestRunMc:
    def test_zero_dispersion_collapses(self):
        disp = DispersionSpec(relative_sigma=0.0, iterations=5, seed=1)
        pole_map = run_mc(_simple_template(noise_db=-math.inf), disp, _GRID, "nonresonant")
        poles = [it.poles[0].pole for it in pole_map.iterations]
        ref = poles[0]
        assert all(abs(p - ref) <= 1e-10 * abs(ref) for p in poles)

    def test_same_seed_identical(self):
        disp = DispersionSpec(relative_sigma=0.05, iterations=8, seed=7)
        m1 = run_mc(_simple_template(), disp, _GRID, "nonresonant")
        m2 = run_mc(_simple_template(), disp, _GRID, "nonresonant")
        assert m1 == m2

    def test_worker_count_does_not_change_result(self):
        disp = DispersionSpec(relative_sigma=0.05, iterations=8, seed=7)
        seq = run_mc(_simple_template(), disp, _GRID, "nonresonant", max_workers=1)
        par = run_mc(_simple_template(), disp, _GRID, "nonresonant", max_workers=4)
        assert seq == par

    def test_scatter_tracks_component_dispersion(self):
        disp = DispersionSpec(relative_sigma=0.05, iterations=60, seed=11)
        pole_map = run_mc(_simple_template(), disp, _GRID, "nonresonant")
        stats = scatter_stats(pole_map, (0.0, 1e8))
        # 5% independent dispersion on R and C -> ~7.1% scatter of 1/(RC)
        rel = stats.std_re / abs(stats.mean_re)
        assert 0.03 < rel < 0.15

    def test_doubling_sigma_does_not_reduce_scatter(self):
        base = DispersionSpec(relative_sigma=0.05, iterations=200, seed=13)
        double = DispersionSpec(relative_sigma=0.10, iterations=200, seed=13)
        m1 = run_mc(_simple_template(), base, _GRID, "nonresonant")
        m2 = run_mc(_simple_template(), double, _GRID, "nonresonant")
        s1 = scatter_stats(m1, (0.0, 1e8))
        s2 = scatter_stats(m2, (0.0, 1e8))
        assert s2.std_re > s1.std_re

    def test_bad_mode_rejected(self):
        disp = DispersionSpec(iterations=1)
        with pytest.raises(ArgumentError):
            run_mc(_simple_template(), disp, _GRID, "bogus")

    def test_failed_iterations_recorded_not_fatal(self):
        # featureless template: every pole is pruned, every iteration fails
        t = CircuitTemplate(direct_term=1.0, noise_floor_db=-100.0)
        disp = DispersionSpec(relative_sigma=0.05, iterations=4, seed=3)
        pole_map = run_mc(t, disp, _GRID, "nonresonant")
        assert pole_map.n_failed >= 3
        for it in pole_map.iterations:
            if it.failed:
                assert it.error
                assert it.poles == ()


class TestScatterStats:
    def test_two_real_poles_sample_std(self):
        t = _simple_template()
        disp = DispersionSpec(relative_sigma=0.0, iterations=2, seed=1)
        pole_map = run_mc(t, disp, _GRID, "nonresonant")
        # overwrite with a handcrafted map equivalent: poles -1 and -3
        from polefit.montecarlo import McIteration, PoleMap, PoleRecord

        pm = PoleMap(
            iterations=(
                McIteration(0, (PoleRecord(complex(-1.0), "real", 1.0, "stable"),)),
                McIteration(1, (PoleRecord(complex(-3.0), "real", 1.0, "stable"),)),
            ),
            band=pole_map.band,
            mode="nonresonant",
            seed=0,
        )
        stats = scatter_stats(pm, (0.0, 1e9))
        assert stats.mean_re == pytest.approx(-2.0)
        assert stats.std_re == pytest.approx(math.sqrt(2.0))
        assert stats.count == 2

    def test_empty_filter_rejected(self):
        disp = DispersionSpec(relative_sigma=0.0, iterations=2, seed=1)
        pole_map = run_mc(_simple_template(), disp, _GRID, "nonresonant")
        with pytest.raises(ArgumentError):
            scatter_stats(pole_map, (1e9, 2e9))


class TestPoleMapCsv:
    def test_header_and_shape(self, tmp_path):
        disp = DispersionSpec(relative_sigma=0.05, iterations=3, seed=5)
        pole_map = run_mc(_simple_template(), disp, _GRID, "nonresonant")
        p = tmp_path / "map.csv"
        save_pole_map_csv(pole_map, p)
        lines = p.read_text().strip().splitlines()
        assert lines[0] == "iteration,pole_re_radps,pole_im_radps,kind,rho,stability"
        assert len(lines) == 1 + len(pole_map.all_records())


class TestResolveWorkers:
    def test_zero_means_auto(self):
        assert resolve_workers(0, 100) >= 1

    def test_cap_applies(self):
        assert resolve_workers(3, 100) == 3
        assert resolve_workers(8, 2) == 2

    def test_negative_rejected(self):
        with pytest.raises(ArgumentError):
            resolve_workers(-1, 10)
