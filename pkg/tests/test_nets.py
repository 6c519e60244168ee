import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jlbound.nets import (
    L2Ball,
    LocateError,
    NetBudgetError,
    NetError,
    SliceBody,
    audit_net,
    body_from_json,
    body_norm,
    build_net,
    locate,
    min_center_separation,
    nearest_distances,
    orthonormalize_columns,
    verify_cover_bound,
)


def test_orthonormalize_identity():
    assert np.array_equal(orthonormalize_columns(np.eye(3)).columns, np.eye(3))


def test_orthonormalize_repeated_column():
    Q = orthonormalize_columns(np.array([[1.0, 2.0], [0.0, 0.0]])).columns
    assert Q.shape == (2, 1)
    assert np.allclose(Q[:, 0], [1, 0])


def test_orthonormalize_zero_matrix():
    with pytest.raises(NetError):
        orthonormalize_columns(np.zeros((3, 2)))


def residual_rank(A, tol=1e-10):
    # independent oracle: SVD rank
    s = np.linalg.svd(A, compute_uv=False)
    return int(np.sum(s > tol * s.max()))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 6), st.integers(1, 6))
def test_orthonormalize_random(seed, d, r):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((d, r))
    if rng.uniform() < 0.5 and r > 1:
        A[:, -1] = A[:, 0] - 2 * A[:, 1 % r]
    Q = orthonormalize_columns(A).columns
    assert Q.shape[1] == residual_rank(A)
    assert np.allclose(Q.T @ Q, np.eye(Q.shape[1]), atol=1e-12)
    # every column of A lies in span(Q)
    assert np.allclose(Q @ (Q.T @ A), A, atol=1e-9)


def test_body_norm_values():
    ball = L2Ball(3, 2.0)
    assert body_norm(ball, [0, 0, 0]) == 0.0
    assert body_norm(ball, [0, 2, 0]) == pytest.approx(1.0)
    s = SliceBody(np.eye(3)[:, :2], 1.0)
    assert body_norm(s, [0.5, -0.75]) == pytest.approx(0.75)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.floats(-5, 5))
def test_body_norm_homogeneous(seed, t):
    rng = np.random.default_rng(seed)
    Q = orthonormalize_columns(rng.standard_normal((5, 2))).columns
    for body in (L2Ball(4, 1.5), SliceBody(Q, 1.3)):
        c = rng.standard_normal(body.intrinsic_dim)
        assert body_norm(body, t * c) == pytest.approx(abs(t) * body_norm(body, c), rel=1e-12, abs=1e-15)


def test_slice_body_rejects_non_orthonormal():
    with pytest.raises(NetError):
        SliceBody(np.array([[1.0, 1.0], [0.0, 1.0]]), 1.0)


def test_body_json_roundtrip():
    s = SliceBody(np.eye(4)[:, 1:3], 2.5)
    assert body_from_json(s.to_json()) == s
    b = L2Ball(2, 1.1)
    assert body_from_json(b.to_json()) == b


def test_net_one_dim_eps_one():
    net = build_net(L2Ball(1, 1.0), 1.0)
    assert len(net) == 1 and np.array_equal(net.centers, [[0.0]])


def test_net_square_ball_small():
    net = build_net(L2Ball(2, 1.0), 0.5)
    assert len(net) <= 81
    pts = np.random.default_rng(0).uniform(-1, 1, (20000, 2))
    pts = pts[np.linalg.norm(pts, axis=1) <= 1]
    assert nearest_distances(net, pts).max() <= 0.5


def test_net_one_axis_slice():
    net = build_net(SliceBody(np.eye(3)[:, :1], 1.0), 0.5)
    assert len(net) <= 9
    # the slice is the segment [-1, 1]
    xs = np.linspace(-1, 1, 2001)[:, None]
    assert nearest_distances(net, xs).max() <= 0.5 + 1e-12


def test_net_radius_errors():
    with pytest.raises(NetError):
        build_net(L2Ball(2, 1.0), 0.0)
    with pytest.raises(NetError):
        build_net(L2Ball(2, 1.0), 1.5)


def test_net_budget():
    with pytest.raises(NetBudgetError):
        build_net(L2Ball(4, 1.0), 0.05, budget=10_000)


def test_locate_examples():
    net = build_net(L2Ball(2, 1.0), 0.5)
    assert locate(net, net.centers[3]) <= 3
    i = locate(net, [0.1, -0.2])
    assert np.linalg.norm(net.centers[i] - [0.1, -0.2]) <= 0.5 + 1e-12
    # smallest qualifying index
    d = np.linalg.norm(net.centers - [0.1, -0.2], axis=1)
    assert i == int(np.flatnonzero(d <= 0.5)[0])
    with pytest.raises(LocateError):
        locate(net, [5.0, 5.0])
    with pytest.raises(NetError):
        locate(net, [0.0, 0.0, 0.0])


def test_verify_cover_bound():
    net = build_net(L2Ball(2, 1.0), 0.5)
    res = verify_cover_bound(net)
    assert res["count"] == len(net)
    assert res["packing_bound"] == pytest.approx(81.0)
    assert res["packing_ok"]
    assert res["volume_bound"] == pytest.approx(25.0)


@pytest.mark.parametrize("body,eps", [
    (L2Ball(2, 1.0), 0.5),
    (L2Ball(3, 1.0), 0.3),
    (SliceBody(orthonormalize_columns(np.random.default_rng(1).standard_normal((5, 2))).columns, 1.0), 0.25),
])
def test_audit_passes(body, eps):
    res = audit_net(build_net(body, eps), samples=10_000, seed=2)
    assert res["covering_ok"] and res["separation_ok"] and res["packing_ok"]
    assert res["centers_in_body"]


def test_determinism_across_workers():
    body = SliceBody(orthonormalize_columns(np.random.default_rng(3).standard_normal((6, 3))).columns, 1.2)
    a = build_net(body, 0.3, workers=1)
    b = build_net(body, 0.3, workers=3)
    assert np.array_equal(a.centers, b.centers)
    assert np.array_equal(a.centers, build_net(body, 0.3).centers)


@pytest.mark.parametrize("t", [0.5, 2.0, 4.0])
def test_scale_equivariance(t):
    for body, eps in ((L2Ball(2, 1.0), 0.3),
                      (SliceBody(orthonormalize_columns(np.random.default_rng(4).standard_normal((4, 2))).columns, 1.0), 0.2)):
        a = build_net(body, eps)
        b = build_net(body.scaled(t), eps * t)
        assert len(a) == len(b)
        assert np.allclose(b.centers, t * a.centers, rtol=0, atol=1e-12 * t)


def test_separation_and_membership():
    net = build_net(L2Ball(3, 1.1), 0.2)
    assert min_center_separation(net) > 0.1
    assert np.all(np.linalg.norm(net.centers, axis=1) <= 1.1 * (1 + 1e-9))


def test_verify_cover_bound_one_dim():
    res = verify_cover_bound(build_net(L2Ball(1, 1.0), 1.0))
    assert res["count"] == 1 and res["packing_bound"] == 5.0 and res["packing_ok"]
