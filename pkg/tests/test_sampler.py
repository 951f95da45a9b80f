"""Random draws: streams, count laws, grand-canonical and fixed-size samplers."""

import json
import math

import numpy as np
import pytest
from scipy import stats

from multpart import (
    BudgetExhausted,
    EmptySupportError,
    GeometricSeries,
    Ensemble,
    ParamError,
    Partition,
    RngStream,
    TableError,
    coefficients,
    constant_weights,
    default_budget,
    explicit_weights,
    make,
    sample_count,
    sample_grand,
    sample_small_exact,
    sample_small_many,
    sample_small_rejection,
)

from oracles import partitions_into


# ---------------------------------------------------------------------------
# streams


def test_stream_reproducibility():
    a = RngStream(7, 3).generator().random(8)
    b = RngStream(7, 3).generator().random(8)
    assert np.array_equal(a, b)


def test_streams_are_distinct():
    a = RngStream(7, 0).generator().random(8)
    b = RngStream(7, 1).generator().random(8)
    c = RngStream(8, 0).generator().random(8)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_stream_validation():
    with pytest.raises(ParamError):
        RngStream(-1, 0)
    with pytest.raises(ParamError):
        RngStream(3, -2)
    with pytest.raises(ParamError):
        RngStream(1 << 64, 0)


# ---------------------------------------------------------------------------
# partitions


def test_partition_make():
    p = Partition.make({3: 2, 1: 4, 5: 0})
    assert p.counts == {1: 4, 3: 2}
    assert p.weight == 10
    assert p.num_parts == 6


@pytest.mark.parametrize("counts", [{0: 1}, {-2: 1}, {1: -1}, {1.5: 1}])
def test_partition_make_rejects(counts):
    with pytest.raises(ParamError):
        Partition.make(counts)


def test_partition_equality_and_hash():
    a = Partition.make({2: 1, 1: 3})
    b = Partition.make({1: 3, 2: 1})
    assert a == b and hash(a) == hash(b)
    assert a != Partition.make({5: 1})


def test_record_roundtrip():
    p = Partition.make({4: 1, 2: 2, 9: 1})
    rec = p.to_record(RngStream(11, 5))
    line = json.dumps(rec, separators=(",", ":"))
    back = json.loads(line)
    assert back["n"] == 17
    assert back["seed"] == 11 and back["stream"] == 5
    ks = [k for k, _ in back["counts"]]
    assert ks == sorted(ks)
    assert Partition.make({k: r for k, r in back["counts"]}) == p
    assert "seed" not in p.to_record()


# ---------------------------------------------------------------------------
# count laws


def _draw_counts(e, k, x, seed, m):
    return np.array([sample_count(e, k, x, RngStream(seed, i))
                     for i in range(m)])


def test_count_law_geometric():
    # uniform, k=1, x=0.5: P(R=j) = 0.5 * 0.5^j
    draws = _draw_counts(make("uniform"), 1, 0.5, 101, 6000)
    cap = 8
    obs = np.bincount(np.minimum(draws, cap), minlength=cap + 1)
    probs = np.array([0.5 ** (j + 1) for j in range(cap)] + [0.5 ** cap])
    p = stats.chisquare(obs, 6000 * probs).pvalue
    assert p > 0.01


def test_count_law_poisson():
    # exponential series, b_1 = 1, x = 0.7: Poisson(0.7)
    draws = _draw_counts(make("ordered_lists"), 1, 0.7, 102, 6000)
    cap = 6
    obs = np.bincount(np.minimum(draws, cap), minlength=cap + 1)
    pmf = stats.poisson(0.7).pmf(np.arange(cap))
    probs = np.append(pmf, 1.0 - pmf.sum())
    p = stats.chisquare(obs, 6000 * probs).pvalue
    assert p > 0.01


def test_count_law_negative_binomial():
    # doubled constant weights on a geometric series: shape-2 law
    e = Ensemble(GeometricSeries(1), constant_weights().scaled(2.0))
    draws = _draw_counts(e, 1, 0.4, 103, 6000)
    cap = 9
    obs = np.bincount(np.minimum(draws, cap), minlength=cap + 1)
    pmf = np.array([(j + 1) * 0.36 * 0.4 ** j for j in range(cap)])
    probs = np.append(pmf, 1.0 - pmf.sum())
    p = stats.chisquare(obs, 6000 * probs).pvalue
    assert p > 0.01


def test_count_law_inverse_cdf_matches_closed_form():
    # force the general path with a custom copy of the geometric series
    from multpart import CustomSeries, Singularity

    custom = Ensemble(
        CustomSeries(lambda j: 1.0, radius=1.0,
                     singularity=Singularity("pole", 1)),
        constant_weights())
    closed = make("uniform")
    a = _draw_counts(custom, 2, 0.6, 104, 4000)
    b = _draw_counts(closed, 2, 0.6, 105, 4000)
    table = np.vstack([
        np.bincount(np.minimum(a, 6), minlength=7),
        np.bincount(np.minimum(b, 6), minlength=7),
    ])
    keep = table.sum(axis=0) > 0
    p = stats.chi2_contingency(table[:, keep]).pvalue
    assert p > 0.01


def test_count_trivial_cases():
    u = make("uniform")
    assert sample_count(u, 3, 0.0, RngStream(1)) == 0
    evens = make("restricted", parts="evens")
    assert sample_count(evens, 1, 0.5, RngStream(1)) == 0  # b_1 = 0
    with pytest.raises(ParamError):
        sample_count(u, 0, 0.5, RngStream(1))
    with pytest.raises(ParamError):
        sample_count(u, 1, 1.0, RngStream(1))
    with pytest.raises(ParamError):
        sample_count(u, 1, -0.1, RngStream(1))


# ---------------------------------------------------------------------------
# grand-canonical sampler


def test_grand_draw_deterministic():
    u = make("uniform")
    a = sample_grand(u, 0.8, RngStream(5, 2))
    b = sample_grand(u, 0.8, RngStream(5, 2))
    assert a == b
    assert a.weight == sum(k * r for k, r in a.counts.items())


def test_grand_at_zero_is_empty():
    p = sample_grand(make("uniform"), 0.0, RngStream(1))
    assert p.counts == {} and p.weight == 0


def test_grand_moments():
    u = make("uniform")
    m = 4000
    ws = np.array([sample_grand(u, 0.9, RngStream(106, i)).weight
                   for i in range(m)])
    mean, var = u.mean_N(0.9), u.var_N(0.9)
    z_mean = (ws.mean() - mean) / math.sqrt(var / m)
    s2 = ws.var(ddof=1)
    m4 = ((ws - ws.mean()) ** 4).mean()
    se_var = math.sqrt(max(m4 - s2 ** 2, 0.0) / m)
    z_var = (s2 - var) / se_var
    assert abs(z_mean) < 3
    assert abs(z_var) < 3


def test_grand_respects_part_restriction():
    evens = make("restricted", parts="evens")
    for i in range(20):
        p = sample_grand(evens, 0.7, RngStream(107, i))
        assert all(k % 2 == 0 for k in p.counts)


# ---------------------------------------------------------------------------
# fixed-size samplers


def _law_table(n, part_weight):
    """Exact conditioned law as {Partition: probability}."""
    cells = {}
    for counts in partitions_into(n):
        w = 1.0
        for k, r in counts.items():
            w *= part_weight(k, r)
        cells[Partition.make(counts)] = w
    total = sum(cells.values())
    return {p: w / total for p, w in cells.items()}


def _empirical(draws):
    out = {}
    for p in draws:
        out[p] = out.get(p, 0) + 1
    return out


def test_default_budget_formula():
    u = make("uniform")  # beta = 1 -> gamma = 0.75
    assert default_budget(u, 100) == 20 * math.ceil(100 ** 0.75)
    assert default_budget(u, 1) == 20
    ew = make("ewens")  # growth index unknown -> fallback gamma = 0.75
    assert default_budget(ew, 16) == 20 * 8


def test_rejection_law_uniform():
    law = _law_table(5, lambda k, r: 1.0)
    assert len(law) == 7
    draws = sample_small_many(make("uniform"), 5, 3000, seed=108,
                              budget=5000)
    counts = _empirical(draws)
    obs = [counts.get(p, 0) for p in law]
    p = stats.chisquare(obs, [3000 * w for w in law.values()]).pvalue
    assert p > 0.01


def test_exact_law_weighted():
    law = _law_table(5, lambda k, r: 2.0 ** r)
    mono = Partition.make({1: 5})
    assert law[mono] == pytest.approx(32 / 74)
    draws = sample_small_many(make("weighted", y=2), 5, 3000, seed=109,
                              mode="exact")
    counts = _empirical(draws)
    obs = [counts.get(p, 0) for p in law]
    p = stats.chisquare(obs, [3000 * w for w in law.values()]).pvalue
    assert p > 0.01


def test_rejection_and_exact_agree():
    u = make("uniform")
    a = sample_small_many(u, 6, 2000, seed=110, budget=5000)
    b = sample_small_many(u, 6, 2000, seed=111, mode="exact")
    support = sorted({*a, *b}, key=lambda p: sorted(p.counts.items()))
    ca, cb = _empirical(a), _empirical(b)
    table = np.array([[ca.get(p, 0) for p in support],
                      [cb.get(p, 0) for p in support]])
    p = stats.chi2_contingency(table).pvalue
    assert p > 0.01


def test_exact_sampler_weight_exactness():
    w2 = make("weighted", y=2)
    table = coefficients(w2, 2000, keep_prefix=True)
    for i in range(3):
        p = sample_small_exact(w2, 2000, RngStream(112, i), table)
        assert p.weight == 2000
        assert sum(k * r for k, r in p.counts.items()) == 2000


def test_exact_sampler_support_obstruction():
    evens = make("restricted", parts="evens")
    table = coefficients(evens, 8, keep_prefix=True, x0=0.5)
    with pytest.raises(EmptySupportError) as err:
        sample_small_exact(evens, 7, RngStream(1), table)
    assert err.value.attempts == 0
    assert err.value.budget == 0
    # n = 6 has exactly three even partitions
    seen = {frozenset(sample_small_exact(evens, 6, RngStream(113, i),
                                         table).counts.items())
            for i in range(60)}
    want = {frozenset({6: 1}.items()), frozenset({4: 1, 2: 1}.items()),
            frozenset({2: 3}.items())}
    assert seen == want


def test_rejection_budget_exhaustion():
    evens = make("restricted", parts="evens")
    with pytest.raises(BudgetExhausted) as err:
        sample_small_rejection(evens, 7, RngStream(1), budget=50)
    assert err.value.attempts == 50
    assert err.value.budget == 50
    assert err.value.acceptance_estimate == 0.0


def test_small_sampler_validation():
    u = make("uniform")
    with pytest.raises(ParamError):
        sample_small_rejection(u, 0, RngStream(1))
    with pytest.raises(ParamError):
        sample_small_rejection(u, 5, RngStream(1), budget=0)
    plain = coefficients(u, 10)
    with pytest.raises(TableError):
        sample_small_exact(u, 5, RngStream(1), plain)
    pref = coefficients(u, 10, keep_prefix=True)
    with pytest.raises(ParamError):
        sample_small_exact(u, 11, RngStream(1), pref)
    assert sample_small_exact(u, 0, RngStream(1), pref).weight == 0
    with pytest.raises(ParamError):
        sample_small_many(u, 5, 3, seed=1, mode="bogus")
    assert sample_small_many(u, 5, 0, seed=1) == []


def test_small_many_reuses_table():
    u = make("uniform")
    table = coefficients(u, 12, keep_prefix=True)
    a = sample_small_many(u, 12, 10, seed=114, mode="exact", table=table)
    b = sample_small_many(u, 12, 10, seed=114, mode="exact")
    assert a == b
