"""Smoke tests for the python bindings: each core operation is exercised
once against values pinned by the C++ suite."""

import math
from fractions import Fraction

import pytest

import ciasim


def test_version_and_rng():
    assert ciasim.__version__ == "0.1.0"
    assert ciasim.rng_algorithm == "splitmix64-boxmuller-v1"


def test_counting_closed_forms():
    assert ciasim.layer_count(2, 2, [2, 2], 0, 2) == 16
    assert ciasim.kappa(2, 2, [2, 2], 1, 3) == 144
    assert ciasim.xi(2, 2, [1, 1], [1, 1]) == 6
    assert ciasim.choose_n(2, 2, [1, 1], 0, 100) == 10
    with pytest.raises(ciasim.ConfigError):
        ciasim.layer_count(0, 2, [1, 1], 0, 2)


def test_alignment_audit():
    chk = ciasim.verify_alignment(2, 2, [2, 2], [2, 3], 0, 0)
    assert chk["ok"]
    assert chk["favorite_count"] == 32
    cell = chk["interference"][0]
    assert cell["box_count"] == 144
    assert cell["exact_union"] == 126
    assert cell["contained"] and cell["disjoint_from_favorite"]


def test_rate_totals_exact():
    assert ciasim.nominal_dof(2, 2, [1, 1], [2, 2]) == Fraction(16, 17)
    assert ciasim.nominal_dof(2, 2, [1, 1], [1, 1], Fraction(1, 4)) == Fraction(12, 25)
    assert ciasim.dof_profile(2, 2, [1, 1], [1, 1]) == [Fraction(1, 3)] * 2
    ref = ciasim.dof_reference(2, 2)
    assert ref["complex"] == Fraction(4, 3)
    assert ref["real"] == Fraction(8, 7)
    assert ciasim.hybrid_nominal_dof(2, 2, 2) == Fraction(12, 13)
    assert ciasim.hybrid_dof_reference(2) == Fraction(3, 2)


def test_channel_sampling_is_deterministic():
    a = ciasim.Channel.sample(2, 2, [1, 1], seed=7)
    b = ciasim.Channel.sample(2, 2, [1, 1], seed=7)
    assert a.coeff(0, 1, 0) == b.coeff(0, 1, 0)
    assert a.genericity_ok
    assert a.field == "real"
    again = ciasim.Channel.loads(a.dumps())
    assert again.coeff(1, 0, 0) == a.coeff(1, 0, 0)
    c = ciasim.Channel.sample(2, 2, [1, 1], field="complex", seed=7)
    assert isinstance(c.coeff(0, 0, 0), complex)


def test_codec_and_constellation():
    ch = ciasim.Channel.sample(2, 2, [1, 1], seed=5)
    codec = ciasim.Codec(ch, [1, 1], eps=0.05, P=2.0e4, q_override=2)
    assert codec.Q == 2 and codec.q_overridden
    assert codec.total_streams == 4
    assert codec.xi == 6

    cst = codec.constellation(0, 0)
    assert len(cst) == 21609
    assert cst.favorite_digits == 2
    assert cst.min_distance > 0
    for i in (0, 997, 21608):
        assert cst.detect(cst.value_at(i)) == i
    assert len(cst.label_of(0)) == cst.digit_count

    streams = codec.random_streams(seed=1, T=50)
    assert len(streams) == 4 and len(streams[0]) == 50
    assert all(-1 <= u <= 1 for row in streams for u in row)
    x = codec.encode(streams)
    assert len(x) == 2 and len(x[0]) == 50
    assert all(math.isfinite(v) for row in x for v in row)


def test_hybrid_scheme():
    hy = ciasim.Hybrid.build(2, 2, 1, seed=3)
    assert hy.complement_rank == 2
    assert 1.1 <= hy.beta <= 2.0
    assert hy.clean_check()["ok"]
    params = hy.params(eps=0.49, P=1.0e7)
    assert params["Q"] == 2 and params["total_streams"] == 3
    zf = hy.constellation(0, 0, eps=0.49, P=1.0e7)
    assert len(zf) == 9
    compound = hy.constellation(1, 1, eps=0.49, P=1.0e7)
    assert len(compound) == 7203
    assert compound.min_distance > 0


def test_outer_bounds():
    ok = ciasim.check_outer_bounds([2 / 3, 2 / 3], 2, 2)
    assert ok["ok"] and ok["aggregate_slack"] == pytest.approx(0.0, abs=1e-12)
    bad = ciasim.check_outer_bounds([1.0, 1.0], 2, 2)
    assert not bad["ok"]


def test_run_sweep_roundtrip():
    config = {
        "scheme": "x",
        "M": 2,
        "K": 2,
        "J": [1, 1],
        "n": 1,
        "eps": 0.05,
        "P_grid": [2.0e4],
        "trials_per_P": 2,
        "symbols_per_trial": 100,
        "seed": 7,
        "noise_stddev": 0.0,
        "threads": 1,
    }
    report = ciasim.run_sweep(config, fit=False)
    assert report["format"] == "ciasim-report/1"
    row = report["rows"][0]
    assert row["Q"] == 2
    assert row["points"] == 21609
    assert row["ser"] == 0.0
    assert row["bits_ok"] == pytest.approx(4 * math.log2(3))
    assert report["nominal_dof"]["limit"] == "2/3"
    assert report == ciasim.run_sweep(config, fit=False)

    csv_text = ciasim.run_sweep_csv(config, fit=False)
    assert csv_text.splitlines()[1].startswith("P,half_log2P,Q,")

    with pytest.raises(ciasim.ConfigError):
        ciasim.run_sweep({"scheme": "x", "M": 2, "bogus": 1})
