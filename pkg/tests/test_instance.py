import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jlbound.instance import (
    HardInstance,
    HardInstanceParams,
    InstanceError,
    SupportSet,
    build_instance,
    derive_params,
    family_size,
    lower_bound_m,
    make_support_vector,
)


def test_derive_params_eps_sixteenth():
    p = derive_params(1024, 1 / 16, 256)
    assert (p.d, p.k, p.Q, p.gap) == (256, 1, 767, 1.0)


def test_derive_params_gap_is_sixteen_eps():
    p = derive_params(1024, 1 / 32, 256)
    assert p.k == 4
    assert p.gap == 0.5 == 16 * (1 / 32)


def test_derive_params_infeasible():
    # d rounds to 3, leaving no room for a single y-point
    with pytest.raises(InstanceError):
        derive_params(4, 0.4, 256)
    with pytest.raises(InstanceError):
        derive_params(100, 0.6)


def test_params_invariants():
    p = HardInstanceParams.manual(d=6, k=2, Q=3)
    assert p.n == 10 and p.Q == p.n - p.d - 1
    assert p.gap == pytest.approx(1 / math.sqrt(2))
    with pytest.raises(InstanceError):
        HardInstanceParams(n=10, d=6, eps=0.1, k=2, Q=4)
    with pytest.raises(InstanceError):
        HardInstanceParams.manual(d=3, k=4, Q=1)


def test_support_vector_trivial():
    assert np.array_equal(make_support_vector(SupportSet((1,)), 1, 4), np.eye(4)[0])
    y = make_support_vector(SupportSet((1, 2, 3, 4)), 4, 6)
    assert np.array_equal(y, [0.5, 0.5, 0.5, 0.5, 0, 0])
    assert np.linalg.norm(y) == pytest.approx(1, abs=1e-12)


def test_support_vector_gap_matches_sixteen_eps():
    eps = 1 / 64
    k = round(eps ** -2 / 256)  # 16
    S = SupportSet(tuple(range(3, 3 + k)))
    y = make_support_vector(S, k, 40)
    for j in range(1, 41):
        e = np.zeros(40)
        e[j - 1] = 1
        assert y @ e == pytest.approx(16 * eps if j in S else 0.0, abs=1e-15)


def test_support_vector_errors():
    with pytest.raises(InstanceError):
        make_support_vector(SupportSet((1, 2)), 3, 5)
    with pytest.raises(InstanceError):
        make_support_vector(SupportSet((1, 7)), 2, 5)
    with pytest.raises(InstanceError):
        SupportSet((2, 2))


def test_build_instance_q_zero():
    inst = build_instance(HardInstanceParams.manual(d=5, k=2, Q=0), supports=[])
    assert len(inst.points) == 6
    assert np.array_equal(inst.points.points, np.vstack([np.zeros(5), np.eye(5)]))


def test_build_instance_explicit_supports():
    inst = build_instance(HardInstanceParams.manual(d=4, k=1, Q=2), supports=[SupportSet((2,)), SupportSet((4,))])
    assert len(inst.points) == 7
    assert np.array_equal(inst.points[5], np.eye(4)[1])
    assert np.array_equal(inst.points[6], np.eye(4)[3])


def test_build_instance_errors():
    p = HardInstanceParams.manual(d=4, k=2, Q=2)
    with pytest.raises(InstanceError):
        build_instance(p, supports=[SupportSet((1, 2))])
    with pytest.raises(InstanceError):
        build_instance(p, supports=[SupportSet((1, 2)), SupportSet((1,))])
    with pytest.raises(InstanceError):
        build_instance(p)


def test_build_instance_seeded_deterministic():
    p = HardInstanceParams.manual(d=9, k=3, Q=20)
    a, b = build_instance(p, seed=3), build_instance(p, seed=3)
    assert a.supports == b.supports
    assert build_instance(p, seed=4).supports != a.supports


def test_instance_json_roundtrip():
    inst = build_instance(HardInstanceParams.manual(d=5, k=2, Q=4), seed=1)
    back = HardInstance.from_json(inst.to_json())
    assert back.supports == inst.supports
    assert np.array_equal(back.points.points, inst.points.points)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12), st.integers(0, 8), st.integers(0, 1000), st.data())
def test_instance_properties(d, Q, seed, data):
    k = data.draw(st.integers(1, d))
    p = HardInstanceParams.manual(d=d, k=k, Q=Q)
    inst = build_instance(p, seed=seed)
    assert len(inst.points) == p.n == d + Q + 1
    gap = 1 / math.sqrt(k)
    for ell, S in enumerate(inst.supports):
        y = inst.points[d + 1 + ell]
        assert abs(np.linalg.norm(y) - 1) <= 1e-12
        for j in range(1, d + 1):
            ip = y @ inst.points[j]
            assert ip in (0.0, gap)
            assert (ip == gap) == (j in S)


def test_support_sampling_is_uniform():
    p = HardInstanceParams.manual(d=4, k=2, Q=6000)
    counts = {}
    for S in build_instance(p, seed=0).supports:
        counts[S.indices] = counts.get(S.indices, 0) + 1
    assert set(counts) == set(itertools.combinations(range(1, 5), 2))
    # 6 subsets, 1000 expected each; 5 sigma ~ 5 * sqrt(1000 * 5/6)
    assert all(abs(c - 1000) < 5 * math.sqrt(1000 * 5 / 6) for c in counts.values())


def enumerate_family(d, k, Q):
    subsets = list(itertools.combinations(range(d), k))
    return sum(1 for _ in itertools.product(subsets, repeat=Q))


def test_family_size_oracle():
    assert enumerate_family(5, 2, 2) == family_size(5, 2, 2)["size"]
    res = family_size(8, 2, 3)
    assert res["size"] == 28 ** 3 == 21952
    assert family_size(5, 5, 10)["size"] == 1


def test_family_size_chain_small_case():
    res = family_size(8, 2, 3)
    assert res["chain_holds"]
    assert Fraction(8, 4) ** 6 == 64 <= 21952


def test_family_size_error():
    with pytest.raises(InstanceError):
        family_size(3, 4, 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 20), st.integers(1, 30), st.data())
def test_family_chain_property(k, Q, data):
    d = data.draw(st.integers(2 * k, 2 * k + 40))
    res = family_size(d, k, Q)
    b = math.comb(d, k)
    assert res["chain_holds"]
    assert b ** Q >= Fraction(b, 2) ** Q >= Fraction(d, 2 * k) ** (k * Q)


def test_lower_bound_m():
    assert lower_bound_m(10, 0.3) == 0.0
    assert lower_bound_m(2 ** 20, 0.25) == pytest.approx(256.0, abs=1e-9)
    vals = [lower_bound_m(n, 0.1) for n in range(2, 5000, 37)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))
