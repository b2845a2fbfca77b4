import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from hardyamp.bell import CHSH, BellScenario, DomainError
from hardyamp.data import (
    PAPER_FREQS, PAPER_N, CountTable, ParseError, export_counts, ingest_counts, parse_counts_csv,
    parse_counts_json, table1_counts,
)

# published table probabilities, (a, b, x, y)
TABLE_PROBS = {
    (0, 0, 0, 0): 0.022668, (0, 1, 0, 1): 0.000384, (1, 0, 1, 0): 0.000363, (0, 0, 1, 1): 0.000204,
    (1, 1, 0, 0): 0.149410, (0, 0, 0, 1): 0.060024, (1, 1, 1, 1): 0.059417,
}


class TestFixture:
    def test_total(self):
        t = table1_counts()
        assert t.n == PAPER_N and t.scenario == CHSH

    def test_table_probabilities(self):
        f = table1_counts().frequencies()
        for (a, b, x, y), p in TABLE_PROBS.items():
            assert abs(f[x, y, a, b] - p) < 5e-7

    def test_certification_frequencies(self):
        f = table1_counts().frequencies()
        for (a, b, x, y), p in PAPER_FREQS.items():
            assert abs(f[x, y, a, b] - p) < 1e-10

    def test_setting_totals(self):
        tot = table1_counts().totals() / 1e9
        np.testing.assert_allclose(sorted(tot.ravel()), [1.90, 1.91, 1.91, 1.93], atol=0.006)

    def test_counts_near_published_millions(self):
        t = table1_counts()
        assert t.counts[0, 0, 0, 0] / 1e6 == pytest.approx(173.54, abs=0.01)
        assert t.counts[1, 1, 1, 1] / 1e6 == pytest.approx(454.88, abs=0.01)


class TestParsing:
    def test_empty(self):
        with pytest.raises(ParseError):
            parse_counts_csv("")
        with pytest.raises(ParseError):
            parse_counts_csv("a,b,x,y,count\n")

    def test_bad_header(self):
        with pytest.raises(ParseError, match="line 1"):
            parse_counts_csv("x,y,a,b,count\n0,0,0,0,1\n")

    def test_malformed_row_line_number(self):
        text = "a,b,x,y,count\n0,0,0,0,5\n\n0,1,0,zz,3\n"
        with pytest.raises(ParseError, match="line 4"):
            parse_counts_csv(text)
        with pytest.raises(ParseError, match="line 2"):
            parse_counts_csv("a,b,x,y,count\n0,0,0\n")

    def test_negative_count(self):
        with pytest.raises(DomainError):
            parse_counts_csv("a,b,x,y,count\n0,0,0,0,-1\n")
        with pytest.raises(DomainError):
            parse_counts_json('[{"a":0,"b":0,"x":0,"y":0,"count":-2}]')

    def test_out_of_scenario(self):
        with pytest.raises(ParseError):
            parse_counts_csv("a,b,x,y,count\n2,0,0,0,1\n", CHSH)

    def test_scenario_inference(self):
        t = parse_counts_csv("a,b,x,y,count\n2,0,1,0,7\n")
        assert t.scenario == BellScenario(2, 2, 3, 2)

    def test_json_errors(self):
        with pytest.raises(ParseError, match="line"):
            parse_counts_json("{\n bad")
        with pytest.raises(ParseError):
            parse_counts_json('[{"a":0}]')

    def test_comments_ignored(self):
        t = parse_counts_csv("# header comment\na,b,x,y,count\n1,1,1,1,4\n")
        assert t.n == 4


class TestRoundTrip:
    @given(counts=arrays(np.int64, (2, 2, 2, 2), elements=st.integers(0, 10**12)), fmt=st.sampled_from(["csv", "json"]))
    def test_lossless(self, counts, fmt, tmp_path_factory):
        t = CountTable(CHSH, counts)
        path = tmp_path_factory.mktemp("rt") / f"c.{fmt}"
        export_counts(t, path)
        back = ingest_counts(path)
        np.testing.assert_array_equal(back.counts, t.counts)
        assert back.scenario == t.scenario

    def test_json_shape(self):
        d = json.loads(table1_counts().to_json())
        assert len(d["counts"]) == 16 and d["scenario"]["nX"] == 2

    def test_conditional(self):
        t = table1_counts()
        np.testing.assert_allclose(t.conditional().sum(axis=(2, 3)), 1.0)
        with pytest.raises(DomainError):
            CountTable(CHSH, np.zeros(CHSH.shape)).conditional()
