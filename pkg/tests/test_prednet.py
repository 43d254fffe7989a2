import io
import struct

import numpy as np
import pytest

from hetcf.config import ACTIVATIONS, MATCHING_VARIANTS, RunConfig
from hetcf.prednet import (
    CheckpointError,
    backward,
    forward,
    fusion_input_dim,
    init_params,
    l2_penalty,
    load_checkpoint,
    matching_dims,
    project,
    project_backward,
    save_checkpoint,
    score_pairs,
    tower_dims,
    zeros_like_params,
)


def make_cfg(**overrides) -> RunConfig:
    base = dict(
        input_dim=7,
        hidden=6,
        output_dim=5,
        rl_depth=2,
        ml_depth=2,
        matching="combined",
        activation="none",
    )
    base.update(overrides)
    return RunConfig(**base)


def reference_score(eu_row, ev_row, params, cfg):
    """Straight-line per-sample re-implementation used as a duplicate oracle."""

    def act(vec):
        if cfg.activation == "leaky-relu":
            return np.where(vec >= 0, vec, 0.01 * vec)
        return vec

    def head(row):
        hidden = act(row @ params["proj.0.w"] + params["proj.0.b"])
        return hidden @ params["proj.1.w"] + params["proj.1.b"]

    u = head(eu_row)
    v = head(ev_row)
    if cfg.matching == "inner":
        return float(u @ v)
    feats = []
    if cfg.matching == "combined":
        hu, hv = u, v
        item_prefix = "rl_user" if cfg.share_towers else "rl_item"
        for i in range(cfg.rl_depth):
            hu = act(hu @ params[f"rl_user.{i}.w"] + params[f"rl_user.{i}.b"])
            hv = act(hv @ params[f"{item_prefix}.{i}.w"] + params[f"{item_prefix}.{i}.b"])
        feats.append(hu * hv)
    z = np.concatenate([u, v])
    for i in range(cfg.ml_depth):
        z = act(z @ params[f"ml.{i}.w"] + params[f"ml.{i}.b"])
    feats.append(z)
    f = np.concatenate(feats)
    return float(f @ params["fuse.w"] + params["fuse.b"][0])


def fd_gradcheck(cfg, seed, batch=3, coords_per_tensor=8, input_coords=10,
                 with_dropout=False, tol=1e-5, h=1e-4):
    """Central finite differences against the analytic gradients.

    Returns the number of coordinates checked.  With dropout the evaluation
    reseeds the mask stream identically on every call, so the perturbed
    losses see the same masks as the analytic pass.

    Under leaky-relu the loss is piecewise linear in any single coordinate;
    a probe is only a valid difference quotient if no preactivation changes
    sign across the base/+h/-h evaluations (each preactivation is affine in
    the perturbed coordinate until some upstream one crosses zero, so equal
    endpoint signs rule out a kink inside the interval).  Probes that would
    straddle a kink are skipped and replaced by other coordinates.
    """
    rng = np.random.default_rng(seed)
    eu = rng.normal(size=(batch, cfg.input_dim))
    ev = rng.normal(size=(batch, cfg.input_dim))
    wvec = rng.normal(size=batch)
    params = init_params(cfg, seed)

    def mask_rng():
        return np.random.default_rng(4321) if with_dropout else None

    def evaluate(a, b, ps):
        r = mask_rng()
        pu, cu = project(a, ps, cfg, rng=r)
        pv, cv = project(b, ps, cfg, rng=r)
        y, cache = forward(pu, pv, ps, cfg, rng=r)
        pre = [np.sign(cu["h0"]).ravel(), np.sign(cv["h0"]).ravel()]
        for key in ("tu", "tv", "ml"):
            for rec in cache.get(key, []):
                pre.append(np.sign(rec["h"]).ravel())
        return float(wvec @ y), np.concatenate(pre)

    base_loss, base_signs = evaluate(eu, ev, params)
    r = mask_rng()
    pu, cache_u = project(eu, params, cfg, rng=r)
    pv, cache_v = project(ev, params, cfg, rng=r)
    y, cache = forward(pu, pv, params, cfg, rng=r)
    grads, du, dv = backward(wvec, params, cfg, cache)
    d_eu = project_backward(du, params, cfg, cache_u, grads)
    d_ev = project_backward(dv, params, cfg, cache_v, grads)

    assert set(grads) == set(params)
    checked = 0
    skipped = 0
    picker = np.random.default_rng(seed + 1)

    def probe(flat, idx):
        keep = flat[idx]
        flat[idx] = keep + h
        f_plus, s_plus = evaluate(eu, ev, params)
        flat[idx] = keep - h
        f_minus, s_minus = evaluate(eu, ev, params)
        flat[idx] = keep
        if cfg.activation == "leaky-relu":
            stable = (s_plus == base_signs).all() and (s_minus == base_signs).all()
            if not stable or (base_signs == 0).any():
                return None
        return (f_plus - f_minus) / (2 * h)

    def check_tensor(flat, analytic_flat, quota):
        nonlocal checked, skipped
        done = 0
        for idx in picker.permutation(flat.size):
            if done >= quota:
                break
            fd = probe(flat, idx)
            if fd is None:
                skipped += 1
                continue
            assert abs(analytic_flat[idx] - fd) <= tol * max(1.0, abs(fd)), (
                analytic_flat[idx], fd,
            )
            checked += 1
            done += 1

    for name in sorted(params):
        check_tensor(params[name].reshape(-1), grads[name].reshape(-1), coords_per_tensor)
    check_tensor(eu.reshape(-1), d_eu.reshape(-1), input_coords)
    check_tensor(ev.reshape(-1), d_ev.reshape(-1), input_coords)
    assert skipped <= checked, f"too many kink-straddling probes ({skipped})"
    return checked


class TestShapes:
    def test_default_dimension_plan(self):
        cfg = RunConfig(input_dim=256)
        assert tower_dims(cfg) == [64, 128]
        assert matching_dims(cfg) == [128, 128, 128]
        assert fusion_input_dim(cfg) == 256

    def test_inner_has_no_fusion(self):
        with pytest.raises(ValueError):
            fusion_input_dim(RunConfig(input_dim=8, matching="inner"))

    def test_allocation_per_variant(self):
        inner = init_params(make_cfg(matching="inner"), seed=0)
        assert set(inner) == {"proj.0.w", "proj.0.b", "proj.1.w", "proj.1.b"}
        mlp = init_params(make_cfg(matching="mlp"), seed=0)
        assert not any(k.startswith("rl_") for k in mlp)
        assert {"ml.0.w", "ml.1.w", "fuse.w", "fuse.b"} <= set(mlp)
        comb = init_params(make_cfg(), seed=0)
        assert {"rl_user.0.w", "rl_item.0.w", "rl_user.1.w", "rl_item.1.w"} <= set(comb)

    def test_shared_towers_drop_item_params(self):
        params = init_params(make_cfg(share_towers=True), seed=0)
        assert any(k.startswith("rl_user") for k in params)
        assert not any(k.startswith("rl_item") for k in params)

    def test_depth_zero_allocates_nothing_extra(self):
        params = init_params(make_cfg(rl_depth=0, ml_depth=0), seed=0)
        assert set(params) == {"proj.0.w", "proj.0.b", "proj.1.w", "proj.1.b", "fuse.w", "fuse.b"}
        assert params["fuse.w"].shape == (2 * 5 + 5,)

    def test_unresolved_input_dim_rejected(self):
        with pytest.raises(ValueError):
            init_params(RunConfig(), seed=0)


class TestInit:
    def test_deterministic_per_seed(self):
        a = init_params(make_cfg(), seed=3)
        b = init_params(make_cfg(), seed=3)
        c = init_params(make_cfg(), seed=4)
        assert set(a) == set(b) == set(c)
        for name in a:
            np.testing.assert_array_equal(a[name], b[name])
        assert any(not np.array_equal(a[n], c[n]) for n in a if n.endswith(".w"))

    def test_fan_in_bound(self):
        cfg = RunConfig(input_dim=64, hidden=64, output_dim=64)
        params = init_params(cfg, seed=0)
        assert np.abs(params["proj.0.w"]).max() <= 1.0 / 8.0
        assert np.abs(params["proj.1.w"]).max() <= 1.0 / 8.0

    def test_biases_start_at_zero(self):
        params = init_params(make_cfg(), seed=5)
        for name, val in params.items():
            if name.endswith(".b"):
                np.testing.assert_array_equal(val, np.zeros_like(val))

    def test_sample_mean_matches_uniform_law(self):
        # proj.0 holds 1000 x 128 = 128k draws from U(-b, b), b = 1/sqrt(1000)
        cfg = RunConfig(input_dim=1000, hidden=128, output_dim=8, matching="inner")
        w = init_params(cfg, seed=6)["proj.0.w"]
        n = w.size
        bound = 1.0 / np.sqrt(1000)
        sigma_mean = bound / np.sqrt(3) / np.sqrt(n)
        assert abs(w.mean()) < 3 * sigma_mean


class TestForward:
    def test_zero_params_score_zero(self):
        rng = np.random.default_rng(40)
        for matching in ("combined", "mlp"):
            cfg = make_cfg(matching=matching)
            params = zeros_like_params(init_params(cfg, seed=0))
            u = rng.normal(size=(4, cfg.output_dim))
            v = rng.normal(size=(4, cfg.output_dim))
            y, _ = forward(u, v, params, cfg)
            np.testing.assert_array_equal(y, np.zeros(4))

    def test_inner_unit_vectors(self):
        cfg = make_cfg(matching="inner")
        e1 = np.zeros((1, cfg.output_dim))
        e1[0, 0] = 1.0
        y, _ = forward(e1, e1, init_params(cfg, seed=0), cfg)
        assert y[0] == 1.0

    def test_inner_scaling(self):
        cfg = make_cfg(matching="inner")
        rng = np.random.default_rng(41)
        u = rng.normal(size=(3, cfg.output_dim))
        v = rng.normal(size=(3, cfg.output_dim))
        params = init_params(cfg, seed=0)
        y1, _ = forward(u, v, params, cfg)
        y2, _ = forward(2.5 * u, v, params, cfg)
        np.testing.assert_allclose(y2, 2.5 * y1, rtol=1e-12)

    def test_matches_reference_all_variants_and_activations(self):
        rng = np.random.default_rng(42)
        for matching in MATCHING_VARIANTS:
            for activation in ACTIVATIONS:
                for share in (False, True):
                    if share and matching != "combined":
                        continue
                    cfg = make_cfg(matching=matching, activation=activation, share_towers=share)
                    params = init_params(cfg, seed=7)
                    eu = rng.normal(size=(5, cfg.input_dim))
                    ev = rng.normal(size=(5, cfg.input_dim))
                    got = score_pairs(eu, ev, params, cfg)
                    want = [reference_score(eu[i], ev[i], params, cfg) for i in range(5)]
                    np.testing.assert_allclose(got, want, atol=1e-12)

    def test_depth_zero_chains_are_identity(self):
        cfg = make_cfg(rl_depth=0, ml_depth=0)
        params = init_params(cfg, seed=8)
        rng = np.random.default_rng(43)
        u = rng.normal(size=(2, cfg.output_dim))
        v = rng.normal(size=(2, cfg.output_dim))
        y, cache = forward(u, v, params, cfg)
        np.testing.assert_array_equal(cache["h_u"], u)
        np.testing.assert_array_equal(cache["h_v"], v)
        want = np.concatenate([u * v, u, v], axis=1) @ params["fuse.w"] + params["fuse.b"][0]
        np.testing.assert_allclose(y, want, atol=1e-12)

    def test_shared_towers_are_symmetric(self):
        cfg = make_cfg(share_towers=True)
        params = init_params(cfg, seed=9)
        rng = np.random.default_rng(44)
        u = rng.normal(size=(3, cfg.output_dim))
        v = rng.normal(size=(3, cfg.output_dim))
        _, c_uv = forward(u, v, params, cfg)
        _, c_vu = forward(v, u, params, cfg)
        np.testing.assert_array_equal(c_uv["h_u"], c_vu["h_v"])
        np.testing.assert_array_equal(c_uv["h_u"] * c_uv["h_v"], c_vu["h_u"] * c_vu["h_v"])

    def test_non_finite_score_rejected(self):
        cfg = make_cfg(matching="inner")
        u = np.full((1, cfg.output_dim), 1e308)
        with pytest.raises(FloatingPointError):
            forward(u, u, init_params(cfg, seed=0), cfg)


class TestBackward:
    def test_zero_upstream_zero_grads(self):
        cfg = make_cfg()
        params = init_params(cfg, seed=10)
        rng = np.random.default_rng(45)
        u = rng.normal(size=(4, cfg.output_dim))
        v = rng.normal(size=(4, cfg.output_dim))
        _, cache = forward(u, v, params, cfg)
        grads, du, dv = backward(np.zeros(4), params, cfg, cache)
        np.testing.assert_array_equal(du, np.zeros_like(u))
        np.testing.assert_array_equal(dv, np.zeros_like(v))
        for g in grads.values():
            np.testing.assert_array_equal(g, np.zeros_like(g))

    def test_textbook_single_linear_layer(self):
        # mlp with no hidden matching layers is y = [u, v] . w + b
        cfg = make_cfg(matching="mlp", ml_depth=0)
        params = init_params(cfg, seed=11)
        rng = np.random.default_rng(46)
        u = rng.normal(size=(1, cfg.output_dim))
        v = rng.normal(size=(1, cfg.output_dim))
        y, cache = forward(u, v, params, cfg)
        z0 = np.concatenate([u, v], axis=1)
        np.testing.assert_allclose(y, z0 @ params["fuse.w"] + params["fuse.b"][0], atol=1e-12)
        grads, du, dv = backward(np.ones(1), params, cfg, cache)
        np.testing.assert_array_equal(grads["fuse.b"], [1.0])
        np.testing.assert_allclose(grads["fuse.w"], z0[0], atol=1e-15)
        d = cfg.output_dim
        np.testing.assert_array_equal(du[0], params["fuse.w"][:d])
        np.testing.assert_array_equal(dv[0], params["fuse.w"][d:])

    def test_inner_product_gradients(self):
        cfg = make_cfg(matching="inner")
        params = init_params(cfg, seed=12)
        rng = np.random.default_rng(47)
        u = rng.normal(size=(3, cfg.output_dim))
        v = rng.normal(size=(3, cfg.output_dim))
        _, cache = forward(u, v, params, cfg)
        dy = rng.normal(size=3)
        grads, du, dv = backward(dy, params, cfg, cache)
        assert grads == {}
        np.testing.assert_array_equal(du, dy[:, None] * v)
        np.testing.assert_array_equal(dv, dy[:, None] * u)


class TestGradientsFiniteDifference:
    @pytest.mark.parametrize("matching", MATCHING_VARIANTS)
    @pytest.mark.parametrize("activation", ACTIVATIONS)
    def test_all_variants(self, matching, activation):
        cfg = make_cfg(matching=matching, activation=activation)
        checked = fd_gradcheck(cfg, seed=100)
        assert checked >= 30

    def test_shared_towers(self):
        fd_gradcheck(make_cfg(share_towers=True), seed=101)

    def test_depth_zero(self):
        fd_gradcheck(make_cfg(rl_depth=0, ml_depth=0), seed=102)

    def test_with_net_dropout(self):
        cfg = make_cfg(net_dropout=0.3)
        fd_gradcheck(cfg, seed=103, with_dropout=True)

    def test_deep_towers(self):
        fd_gradcheck(make_cfg(rl_depth=3, ml_depth=3), seed=104)


class TestPenalty:
    def test_l2_counts_every_tensor(self):
        params = {"a.w": np.array([1.0, 2.0]), "b.b": np.array([[3.0]])}
        assert l2_penalty(params) == 14.0

    def test_zeros_like_shapes(self):
        params = init_params(make_cfg(), seed=13)
        zeros = zeros_like_params(params)
        assert set(zeros) == set(params)
        for name in params:
            assert zeros[name].shape == params[name].shape
            assert not zeros[name].any()


class TestCheckpoint:
    def test_round_trip_bit_exact(self, tmp_path):
        params = init_params(make_cfg(), seed=14)
        target = tmp_path / "ckpt.bin"
        save_checkpoint(params, target)
        loaded = load_checkpoint(target)
        assert set(loaded) == set(params)
        for name in params:
            assert loaded[name].tobytes() == np.ascontiguousarray(params[name]).tobytes()
            assert loaded[name].shape == params[name].shape

    def test_tensors_stored_sorted(self, tmp_path):
        params = init_params(make_cfg(), seed=15)
        target = tmp_path / "ckpt.bin"
        save_checkpoint(params, target)
        blob = target.read_bytes()
        names = []
        offset = 8
        while offset < len(blob):
            (name_len,) = struct.unpack_from("<I", blob, offset)
            offset += 4
            names.append(blob[offset : offset + name_len].decode())
            offset += name_len
            (rank,) = struct.unpack_from("<I", blob, offset)
            offset += 4
            shape = struct.unpack_from(f"<{rank}Q", blob, offset)
            offset += 8 * rank + 8 * int(np.prod(shape))
        assert names == sorted(params)

    def test_bad_magic_offset_zero(self):
        with pytest.raises(CheckpointError) as err:
            load_checkpoint(io.BytesIO(b"XXXX" + b"\x01\x00\x00\x00"))
        assert err.value.offset == 0

    def test_bad_version_offset_four(self, tmp_path):
        target = tmp_path / "ckpt.bin"
        save_checkpoint({"a": np.zeros(1)}, target)
        blob = bytearray(target.read_bytes())
        blob[4] = 99
        with pytest.raises(CheckpointError) as err:
            load_checkpoint(io.BytesIO(bytes(blob)))
        assert err.value.offset == 4

    def test_truncated_data_reports_read_offset(self, tmp_path):
        target = tmp_path / "ckpt.bin"
        save_checkpoint({"abc": np.zeros(3)}, target)
        blob = target.read_bytes()
        # layout: 8 header + 4 name len + 3 name + 4 rank + 8 dim = 27, then 24 data bytes
        with pytest.raises(CheckpointError) as err:
            load_checkpoint(io.BytesIO(blob[:-1]))
        assert err.value.offset == 27
        assert "abc" in str(err.value)

    def test_truncated_header(self):
        with pytest.raises(CheckpointError):
            load_checkpoint(io.BytesIO(b"LTH"))
