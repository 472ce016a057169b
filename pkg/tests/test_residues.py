import math

import numpy as np
import pytest

from polefit.errors import (
    ArgumentError,
    DegenerateResonanceError,
    EmptyModelError,
    PoleAtOriginError,
)
from polefit.freqresp import FrequencyResponse, make_log_grid
from polefit.identification import identify
from polefit.rational import (
    COMPLEX_PAIR,
    REAL,
    PoleTerm,
    RationalModel,
    eval_s,
    sample_response,
)
from polefit.residues import (
    cancellation_report,
    mimo_identify,
    prune,
    rank_ports,
    rho_complex,
    rho_real,
    save_rho_csv,
)


def _response_from(model, grid):
    return FrequencyResponse(grid, tuple(sample_response(model, grid)))


def _oracle_rho(model, k):
    """Independent route: both numerator and denominator built from generic
    single-term model evaluation instead of the closed-form term arithmetic."""
    term = model.terms[k]
    if term.kind == REAL:
        omega_r = abs(term.pole.real)
    else:
        a, b = term.pole.real, term.pole.imag
        omega_r = math.sqrt(b * b - a * a)
    sub = RationalModel((term,), d=0.0, e=0.0, band=model.band)
    s = 1j * omega_r
    h_k = eval_s(sub, s)
    h = eval_s(model, s)
    denom = abs(h - h_k)
    return math.inf if denom == 0.0 else abs(h_k) / denom


class TestRhoClosedForms:
    def test_real_pole_with_unit_d(self):
        m = RationalModel((PoleTerm(REAL, -1.0, 1.0),), d=1.0)
        assert rho_real(m, 0) == pytest.approx(1.0 / math.sqrt(2.0), rel=1e-12)

    def test_real_pole_large_d_prune_candidate(self):
        m = RationalModel((PoleTerm(REAL, -1.0, 1.0),), d=100.0)
        rho = rho_real(m, 0)
        assert rho == pytest.approx(1.0 / math.sqrt(2.0) / 100.0, rel=1e-12)
        assert rho < 0.01

    def test_pair_with_d_four(self):
        m = RationalModel((PoleTerm(COMPLEX_PAIR, -1 + 10j, 1.0),), d=4.0)
        assert rho_complex(m, 0) == pytest.approx(0.25, rel=1e-12)

    def test_lone_term_is_infinite(self):
        m = RationalModel((PoleTerm(REAL, -1.0, 1.0),))
        assert rho_real(m, 0) == math.inf
        m2 = RationalModel((PoleTerm(COMPLEX_PAIR, -1 + 10j, 1.0),))
        assert rho_complex(m2, 0) == math.inf

    def test_scale_invariance(self):
        m = RationalModel(
            (PoleTerm(REAL, -2.0, 3.0), PoleTerm(COMPLEX_PAIR, -1 + 30j, 2 - 1j)),
            d=0.7,
        )
        base = [rho_real(m, 0), rho_complex(m, 1)]
        m7 = RationalModel(
            tuple(PoleTerm(t.kind, t.pole, t.residue * 7.0) for t in m.terms),
            d=m.d * 7.0,
        )
        assert rho_real(m7, 0) == pytest.approx(base[0], rel=1e-12)
        assert rho_complex(m7, 1) == pytest.approx(base[1], rel=1e-12)

    def test_degenerate_pair_rejected(self):
        m = RationalModel((PoleTerm(COMPLEX_PAIR, -10 + 1j, 1.0),), d=1.0)
        with pytest.raises(DegenerateResonanceError):
            rho_complex(m, 0)

    def test_pole_at_origin_rejected(self):
        m = RationalModel((PoleTerm(REAL, 0.0, 1.0),), d=1.0)
        with pytest.raises(PoleAtOriginError):
            rho_real(m, 0)

    def test_kind_mismatch_rejected(self):
        m = RationalModel((PoleTerm(REAL, -1.0, 1.0),), d=1.0)
        with pytest.raises(ArgumentError):
            rho_complex(m, 0)


class TestRhoOracle:
    def test_matches_brute_force_on_random_models(self):
        rng = np.random.default_rng(77)
        checked = 0
        while checked < 100:
            terms = []
            order = 0
            target = int(rng.integers(1, 7))
            while order < target:
                if rng.random() < 0.5 and order + 2 <= target:
                    b = 10.0 ** rng.uniform(1, 3)
                    a = -b * 10.0 ** rng.uniform(-3, -0.5)
                    terms.append(
                        PoleTerm(COMPLEX_PAIR, complex(a, b), complex(rng.normal(), rng.normal()))
                    )
                    order += 2
                else:
                    terms.append(
                        PoleTerm(REAL, complex(-(10.0 ** rng.uniform(-1, 3))), complex(rng.normal()))
                    )
                    order += 1
            m = RationalModel(tuple(terms), d=float(rng.normal()))
            for k, t in enumerate(m.terms):
                want = _oracle_rho(m, k)
                got = rho_real(m, k) if t.kind == REAL else rho_complex(m, k)
                if math.isinf(want):
                    assert math.isinf(got)
                else:
                    assert got == pytest.approx(want, rel=1e-10)
                checked += 1

    def test_offset_strictly_decreases_rho(self):
        m = RationalModel(
            (PoleTerm(REAL, -2.0, 3.0), PoleTerm(COMPLEX_PAIR, -1 + 30j, 2 - 1j)),
            d=1.0,
        )
        base = [rho_real(m, 0), rho_complex(m, 1)]
        m_off = RationalModel(m.terms, d=m.d + 5.0)
        assert rho_real(m_off, 0) < base[0]
        assert rho_complex(m_off, 1) < base[1]


class TestPrune:
    def _over_ordered_fixture(self):
        grid = make_log_grid(0.01, 100.0, 40)
        truth = RationalModel((PoleTerm(REAL, -1.0, 1.0),), d=0.3)
        r = _response_from(truth, grid)
        over = identify(r, [-0.1, -1.0, -10.0])
        return r, over

    def test_over_order_round_trip(self):
        r, over = self._over_ordered_fixture()
        assert over.order == 3
        pruned, report = prune(over, r)
        assert pruned.order == 1
        assert pruned.terms[0].pole.real == pytest.approx(-1.0, rel=1e-6)
        assert pruned.phase_error <= 0.5
        assert sum(1 for rec in report.records if rec.pruned) == 2

    def test_no_op_prune_keeps_model_and_residues(self):
        grid = make_log_grid(0.01, 100.0, 40)
        truth = RationalModel((PoleTerm(REAL, -1.0, 1.0),), d=0.3)
        r = _response_from(truth, grid)
        m = identify(r, [-1.0])
        pruned, report = prune(m, r)
        assert pruned.terms == m.terms
        assert all(not rec.pruned for rec in report.records)

    def test_threshold_boundary_keeps_exact_value(self):
        m = RationalModel((PoleTerm(REAL, -1.0, 1.0), PoleTerm(REAL, -50.0, 60.0)), d=1.0)
        rho0 = rho_real(m, 0)
        grid = make_log_grid(0.01, 1000.0, 40)
        r = _response_from(m, grid)
        pruned, report = prune(m, r, threshold=rho0)
        rec = next(rec for rec in report.records if rec.pole == -1.0)
        assert not rec.pruned

    def test_all_pruned_raises_with_report(self):
        grid = make_log_grid(0.01, 100.0, 40)
        m = RationalModel((PoleTerm(REAL, -1.0, 1e-9),), d=1.0, band=(0.01, 100.0))
        r = _response_from(m, grid)
        with pytest.raises(EmptyModelError) as ei:
            prune(m, r)
        assert ei.value.report is not None
        assert len(ei.value.report.records) == 1

    def test_prune_idempotent(self):
        r, over = self._over_ordered_fixture()
        once, _ = prune(over, r)
        twice, rep = prune(once, r)
        assert twice.terms == once.terms
        assert rep.passes == 1

    def test_verdict_bands(self):
        m = RationalModel(
            (PoleTerm(REAL, -1.0, 10.0), PoleTerm(REAL, -40.0, 2.0), PoleTerm(REAL, -2000.0, 0.001)),
            d=1.0,
        )
        grid = make_log_grid(0.001, 1e5, 30)
        r = _response_from(m, grid)
        _, report = prune(m, r, threshold=1e-12)
        verdicts = {f"{rec.pole.real:g}": rec.verdict for rec in report.records}
        assert verdicts["-1"] == "high"
        assert verdicts["-40"] == "low"
        assert verdicts["-2000"] == "overfit"


class TestCancellation:
    def test_quasi_cancelled_pair_flagged(self):
        # H = (s + 1.0001)/(s + 1): residue 1e-4 at the pole, zero at -1.0001
        m = RationalModel((PoleTerm(REAL, -1.0, 1e-4),), d=1.0, band=(0.001, 10.0))
        rep = cancellation_report(m)
        assert rep[0].metric == pytest.approx(1e-4, rel=1e-6)
        assert rep[0].quasi_cancelled

    def test_separated_zero_not_flagged(self):
        m = RationalModel((PoleTerm(REAL, -1.0, 1.0),), d=1.0, band=(0.001, 10.0))
        rep = cancellation_report(m)
        assert rep[0].nearest_zero == pytest.approx(-2.0)
        assert rep[0].metric == pytest.approx(1.0, rel=1e-9)
        assert not rep[0].quasi_cancelled

    def test_no_zeros_reports_infinity(self):
        m = RationalModel((PoleTerm(REAL, -1.0, 1.0),), band=(0.001, 10.0))
        rep = cancellation_report(m)
        assert rep[0].nearest_zero is None
        assert rep[0].metric == math.inf
        assert not rep[0].quasi_cancelled


class TestMimo:
    def _two_ports(self):
        grid = make_log_grid(1e-3, 10.0, 50)
        a = RationalModel((PoleTerm(REAL, -1.0, 1.0),), d=1.0)
        b = RationalModel((PoleTerm(REAL, -1.0, 0.01),), d=1.0)
        return (
            FrequencyResponse(grid, tuple(sample_response(a, grid)), label="portA"),
            FrequencyResponse(grid, tuple(sample_response(b, grid)), label="portB"),
        )

    def test_shared_pole_and_per_port_rho(self):
        ra, rb = self._two_ports()
        res = mimo_identify([ra, rb], [-0.3])
        assert res.shared_poles[0].real == pytest.approx(-1.0, rel=1e-8)
        assert res.reports[0].records[0].rho == pytest.approx(1 / math.sqrt(2), rel=1e-6)
        assert res.reports[1].records[0].rho == pytest.approx(0.01 / math.sqrt(2), rel=1e-4)

    def test_rank_ports_descending(self):
        ra, rb = self._two_ports()
        res = mimo_identify([ra, rb], [-0.3])
        ranking = rank_ports(res, lambda p: p.imag == 0)
        assert [pr.label for pr in ranking] == ["portA", "portB"]

    def test_identical_ports_keep_input_order(self):
        ra, _ = self._two_ports()
        rb = FrequencyResponse(ra.grid, ra.samples, label="portZ")
        res = mimo_identify([ra, rb], [-0.3])
        ranking = rank_ports(res, lambda p: True)
        assert [pr.label for pr in ranking] == ["portA", "portZ"]

    def test_selector_must_match(self):
        ra, rb = self._two_ports()
        res = mimo_identify([ra, rb], [-0.3])
        with pytest.raises(ArgumentError):
            rank_ports(res, lambda p: p.imag > 0)

    def test_ranking_invariant_under_common_rescale(self):
        ra, rb = self._two_ports()
        res = mimo_identify([ra, rb], [-0.3])
        scaled = [
            FrequencyResponse(r.grid, tuple(3.5 * np.asarray(r.samples)), label=r.label)
            for r in (ra, rb)
        ]
        res2 = mimo_identify(scaled, [-0.3])
        r1 = rank_ports(res, lambda p: True)
        r2 = rank_ports(res2, lambda p: True)
        assert [pr.label for pr in r1] == [pr.label for pr in r2]
        for a, b in zip(r1, r2):
            assert a.rho == pytest.approx(b.rho, rel=1e-6)

    def test_four_port_scale_order(self):
        grid = make_log_grid(1e-3, 10.0, 40)
        scales = [1.0, 0.5, 0.1, 0.01]
        responses = []
        for i, sc in enumerate(scales):
            m = RationalModel((PoleTerm(REAL, -1.0, sc),), d=1.0)
            responses.append(
                FrequencyResponse(grid, tuple(sample_response(m, grid)), label=f"p{i}")
            )
        res = mimo_identify(responses, [-0.5])
        ranking = rank_ports(res, lambda p: p.imag == 0)
        assert [pr.label for pr in ranking] == ["p0", "p1", "p2", "p3"]


class TestRhoCsv:
    def test_header_and_rows(self, tmp_path):
        m = RationalModel((PoleTerm(REAL, -1.0, 1.0), PoleTerm(REAL, -50.0, 60.0)), d=1.0)
        grid = make_log_grid(0.01, 1000.0, 30)
        r = _response_from(m, grid)
        _, report = prune(m, r, threshold=1e-12)
        p = tmp_path / "rho.csv"
        save_rho_csv(report, p)
        lines = p.read_text().strip().splitlines()
        assert lines[0] == "pole_re,pole_im,kind,rho,omega_r,verdict"
        assert len(lines) == 3
