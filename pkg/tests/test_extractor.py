import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hardyamp.bell import DomainError, StructuralError
from hardyamp.data import table1_counts
from hardyamp.extractor import (
    EPS_CHSH, InnerProductExtractor, cg_extract, delta_raz, exhaustive_bias, k_bits, k_from_h, pipeline,
    raz_check, security_slack,
)
from hardyamp.protocol import delta_exp_from_counts

bits = st.lists(st.integers(0, 1), min_size=1, max_size=64)


@pytest.fixture(scope="module")
def table():
    return table1_counts()


class TestInnerProduct:
    @given(st.data())
    def test_matches_definition(self, data):
        x = data.draw(bits)
        y = data.draw(st.lists(st.integers(0, 1), min_size=len(x), max_size=len(x)))
        assert cg_extract(x, y) == sum(a * b for a, b in zip(x, y)) % 2

    @pytest.mark.parametrize("length", range(1, 11))
    def test_exhaustive_bias(self, length):
        assert exhaustive_bias(length) == 2.0**-length

    @pytest.mark.parametrize("length", [3, 5])
    def test_bias_oracle(self, length):
        ones = sum(cg_extract(x, y) for x in itertools.product((0, 1), repeat=length)
                   for y in itertools.product((0, 1), repeat=length))
        total = 4**length
        assert exhaustive_bias(length) == abs(total - 2 * ones) / total

    def test_errors(self):
        with pytest.raises(StructuralError):
            cg_extract([0, 1], [1])
        with pytest.raises(DomainError):
            exhaustive_bias(0)

    def test_extractor_object(self):
        out = InnerProductExtractor().extract([1, 1, 0], [1, 1, 1])
        assert out.tolist() == [0]


class TestRaz:
    def test_delta_raz_boundary(self):
        n = 7655734250
        assert EPS_CHSH == pytest.approx(0.2071067812)
        assert delta_raz(EPS_CHSH - 1e-4, n) > 0
        assert delta_raz(EPS_CHSH + 1e-4, n) < 0

    def test_constraints(self):
        p = raz_check(1e9, 0.1, 5000)
        assert p.feasible and all(p.constraints.values())
        assert p.mRaz == math.floor(delta_raz(0.1, 1e9) * 5000 / 40) - 1
        bad = raz_check(1e9, 0.25, 5000)
        assert not bad.constraints["2R"] and bad.status == "infeasible"
        small = raz_check(1e9, 0.1, 50)
        assert not small.constraints["4R"]

    def test_sufficient_3r(self):
        p = raz_check(1e9, 0.1, 5000)
        assert p.threshold3R <= p.sufficient3R

    def test_domain(self):
        with pytest.raises(DomainError):
            raz_check(1e9, 0.1, -1)


class TestOutputLength:
    @given(st.floats(100, 1e5), st.floats(0, 0.2), st.integers(0, 200), st.integers(0, 200))
    def test_t_shift(self, h, eps, t, s):
        a = k_from_h(h, eps, 1e9, t)
        b = k_from_h(h, eps, 1e9, t + s)
        assert a.raw - b.raw == pytest.approx(s / 2, abs=1e-9)
        assert a.kFloor >= b.kFloor >= 0

    def test_paper_data_k(self, table):
        kb = k_bits(delta_exp_from_counts(table, 0.1), 0.1, table.n, 5)
        assert 20 <= kb.kFloor <= 31

    def test_negative_t(self, table):
        with pytest.raises(DomainError):
            k_bits(0.003, 0.1, 1e9, -1)


class TestSecurity:
    def test_pipeline_condition(self, table):
        pl = pipeline(delta_exp_from_counts(table, 0.1), 0.1, table.n, 5)
        assert pl.raz.feasible
        assert pl.security.conditionHolds
        assert pl.security.log2Delta <= -5
        assert pl.security.per_output_bound() == pytest.approx((1 + pl.security.Delta) / 2**pl.k.kFloor)

    def test_slack_monotone_in_k(self):
        a = security_slack(30, 0.9, 0.01, 1e9, 0.001, 10)
        b = security_slack(30, 0.9, 0.01, 1e9, 0.001, 20)
        assert b.log2Delta - a.log2Delta == pytest.approx(10)

    def test_no_underflow(self):
        rep = security_slack(4000, 0.5, 0.5, 1e9, 0.01, 5, t=5)
        assert math.isfinite(rep.log2Delta) and rep.log2Delta < -1000
        assert rep.conditionHolds and rep.Delta == 0.0
        assert set(rep.to_dict()["notes"]) == {"z", "e", "w", "o"}

    def test_gamma_domain(self):
        with pytest.raises(DomainError):
            security_slack(10, 1.5, 0.1, 1e9, 0.01, 5)
