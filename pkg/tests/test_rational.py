import math

import numpy as np
import pytest

from polefit.errors import ArgumentError, DegenerateModelError, MetricError
from polefit.freqresp import FrequencyResponse, make_log_grid
from polefit.rational import (
    COMPLEX_PAIR,
    REAL,
    PoleTerm,
    RationalModel,
    eval_s,
    evaluate,
    load_model,
    model_from_dict,
    model_to_dict,
    phase_error_deg,
    sample_response,
    save_model,
    save_pole_csv,
    zeros,
)


def _random_model(rng, max_order=6, with_d=True):
    terms = []
    order = 0
    while order < max_order:
        if rng.random() < 0.5 and order + 2 <= max_order:
            a = -(10 ** rng.uniform(0, 3))
            b = 10 ** rng.uniform(1, 4)
            r = complex(rng.normal(), rng.normal())
            terms.append(PoleTerm(COMPLEX_PAIR, complex(a, b), r))
            order += 2
        else:
            terms.append(PoleTerm(REAL, complex(-(10 ** rng.uniform(0, 3))), complex(rng.normal())))
            order += 1
        if rng.random() < 0.3:
            break
    d = float(rng.normal()) if with_d else 0.0
    return RationalModel(tuple(terms), d=d, band=(0.01, 1e4))


class TestPoleTerm:
    def test_real_term_rejects_complex(self):
        with pytest.raises(ArgumentError):
            PoleTerm(REAL, -1 + 1j, 1.0)

    def test_pair_needs_positive_imag(self):
        with pytest.raises(ArgumentError):
            PoleTerm(COMPLEX_PAIR, -1 - 2j, 1.0)

    def test_order(self):
        assert PoleTerm(REAL, -1.0, 1.0).order == 1
        assert PoleTerm(COMPLEX_PAIR, -1 + 2j, 1.0).order == 2


class TestEvaluate:
    def test_real_pole_at_dc(self):
        m = RationalModel((PoleTerm(REAL, -1.0, 1.0),))
        assert evaluate(m, 0.0) == pytest.approx(1 + 0j)

    def test_real_pole_at_omega_one(self):
        m = RationalModel((PoleTerm(REAL, -1.0, 1.0),))
        v = eval_s(m, 1j)
        assert v == pytest.approx(0.5 - 0.5j)

    def test_conjugate_symmetry_random(self):
        rng = np.random.default_rng(11)
        for _ in range(40):
            m = _random_model(rng)
            w = 2j * math.pi * 10 ** rng.uniform(-2, 4)
            hp = eval_s(m, w)
            hm = eval_s(m, -w)
            assert abs(hm - np.conj(hp)) < 1e-12 * max(abs(hp), 1e-30)

    def test_negative_frequency_rejected(self):
        m = RationalModel((PoleTerm(REAL, -1.0, 1.0),))
        with pytest.raises(ArgumentError):
            evaluate(m, -1.0)


class TestPhaseError:
    def _model_and_response(self):
        m = RationalModel((PoleTerm(REAL, -100.0, 50.0),), d=0.3, band=(0.1, 100.0))
        grid = make_log_grid(0.1, 100.0, 21)
        h = sample_response(m, grid)
        return m, grid, h

    def test_identity_is_zero(self):
        m, grid, h = self._model_and_response()
        r = FrequencyResponse(grid, tuple(h))
        assert phase_error_deg(m, r) == pytest.approx(0.0, abs=1e-12)

    def test_constant_rotation(self):
        m, grid, h = self._model_and_response()
        r = FrequencyResponse(grid, tuple(h * np.exp(1j * math.pi / 180)))
        assert phase_error_deg(m, r) == pytest.approx(1.0, rel=1e-9)

    def test_sign_flip_wraps_to_180(self):
        m, grid, h = self._model_and_response()
        r = FrequencyResponse(grid, tuple(-h))
        assert phase_error_deg(m, r) == pytest.approx(180.0, rel=1e-9)

    def test_scale_invariance(self):
        m, grid, h = self._model_and_response()
        r = FrequencyResponse(grid, tuple(h * np.exp(0.004j)))
        base = phase_error_deg(m, r)
        m2 = RationalModel(
            tuple(PoleTerm(t.kind, t.pole, t.residue * 7.0) for t in m.terms),
            d=m.d * 7.0,
            band=m.band,
        )
        r2 = FrequencyResponse(grid, tuple(7.0 * h * np.exp(0.004j)))
        assert phase_error_deg(m2, r2) == pytest.approx(base, rel=1e-12)

    def test_zero_magnitude_sample_rejected(self):
        m, grid, h = self._model_and_response()
        h = h.copy()
        h[0] = 0.0
        r = FrequencyResponse(grid, tuple(h))
        with pytest.raises(MetricError):
            phase_error_deg(m, r)


class TestZeros:
    def test_single_pole_with_d(self):
        m = RationalModel((PoleTerm(REAL, -1.0, 1.0),), d=1.0)
        assert zeros(m) == pytest.approx([-2.0])

    def test_single_pole_no_numerator_roots(self):
        m = RationalModel((PoleTerm(REAL, -1.0, 1.0),))
        assert zeros(m) == []

    def test_two_real_poles(self):
        # residues 1 each: numerator (s+3) + (s+1) = 2s + 4
        m = RationalModel((PoleTerm(REAL, -1.0, 1.0), PoleTerm(REAL, -3.0, 1.0)))
        assert zeros(m) == pytest.approx([-2.0])

    def test_degenerate_rejected(self):
        m = RationalModel((PoleTerm(REAL, -1.0, 0.0),))
        with pytest.raises(DegenerateModelError):
            zeros(m)

    def test_slope_term_raises_degree(self):
        m = RationalModel((PoleTerm(REAL, -1.0, 1.0),), d=1.0, e=1.0)
        zs = zeros(m)
        assert len(zs) == 2

    def test_zeros_annihilate_h_random(self):
        rng = np.random.default_rng(23)
        grid = make_log_grid(0.01, 1e4, 40)
        for _ in range(40):
            m = _random_model(rng)
            try:
                zs = zeros(m)
            except DegenerateModelError:
                continue
            if not zs:
                continue
            href = np.max(np.abs(sample_response(m, grid)))
            for z in zs:
                assert abs(eval_s(m, z)) < 1e-8 * href


class TestSerialization:
    def test_round_trip(self, tmp_path):
        m = RationalModel(
            (PoleTerm(REAL, -1.5, 2.0), PoleTerm(COMPLEX_PAIR, -2 + 30j, 1 - 1j)),
            d=0.25,
            band=(1.0, 1e6),
            phase_error=0.01,
            converged=False,
        )
        p = tmp_path / "model.json"
        save_model(m, p)
        m2 = load_model(p)
        assert m2 == m

    def test_dict_round_trip(self):
        m = RationalModel((PoleTerm(REAL, -1.0, 1.0),), d=1.0, band=(1.0, 2.0))
        assert model_from_dict(model_to_dict(m)) == m

    def test_pole_csv(self, tmp_path):
        m = RationalModel((PoleTerm(COMPLEX_PAIR, -2 + 30j, 1 - 1j),), band=(1.0, 1e6))
        p = tmp_path / "poles.csv"
        save_pole_csv(m, p)
        lines = p.read_text().strip().splitlines()
        assert lines[0] == "re_radps,im_radps,kind"
        assert lines[1] == "-2,30,complex_pair"
