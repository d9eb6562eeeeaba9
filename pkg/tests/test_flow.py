"""Flow file format, grid conversion, and noise injection."""

import json

import numpy as np
import pytest

from crowdmpm.core import GridSpec
from crowdmpm.errors import BadMagic, DimMismatch, TruncatedFile
from crowdmpm.flow import (
    FlowFrame,
    FlowSequence,
    NoiseSpec,
    field_to_flow,
    flow_to_field,
    inject_noise,
    read_flo,
    read_sequence,
    write_flo,
    write_sequence,
)


def rand_frame(w=24, h=16, seed=0, t=0.0):
    rng = np.random.default_rng(seed)
    uv = rng.normal(0, 1, (h, w, 2)).astype(np.float32).astype(np.float64)
    return FlowFrame(width=w, height=h, uv=uv, timestamp=t)


def const_frame(u, v, w=24, h=16, t=0.0):
    return FlowFrame(width=w, height=h, uv=np.broadcast_to([u, v], (h, w, 2)).copy(), timestamp=t)


# --- .flo container --------------------------------------------------------


def test_flo_round_trip_bit_exact(tmp_path):
    f = rand_frame()
    p = tmp_path / "a.flo"
    write_flo(f, p)
    g = read_flo(p)
    np.testing.assert_array_equal(f.uv, g.uv)
    assert g.mask.all()
    # writing again produces identical bytes
    p2 = tmp_path / "b.flo"
    write_flo(g, p2)
    assert p.read_bytes() == p2.read_bytes()


def test_flo_layout_size(tmp_path):
    f = FlowFrame(width=2, height=1, uv=np.array([[[1.0, 2.0], [3.0, 4.0]]]))
    p = tmp_path / "c.flo"
    write_flo(f, p)
    assert p.stat().st_size == 12 + 16


def test_flo_bad_magic(tmp_path):
    p = tmp_path / "x.flo"
    p.write_bytes(b"XXXX" + b"\0" * 32)
    with pytest.raises(BadMagic):
        read_flo(p)


def test_flo_truncated(tmp_path):
    f = rand_frame()
    p = tmp_path / "t.flo"
    write_flo(f, p)
    raw = p.read_bytes()
    p.write_bytes(raw[: len(raw) - 10])
    with pytest.raises(TruncatedFile):
        read_flo(p)


def test_flo_sentinel_becomes_mask(tmp_path):
    f = rand_frame(w=8, h=8)
    f.mask[2, 3] = False
    f.mask[7, 0] = False
    p = tmp_path / "m.flo"
    write_flo(f, p)
    g = read_flo(p)
    np.testing.assert_array_equal(g.mask, f.mask)
    assert np.abs(g.uv[2, 3]).max() == 0.0
    valid = f.mask
    np.testing.assert_array_equal(g.uv[valid], f.uv[valid])


# --- sequences -------------------------------------------------------------


def test_sequence_round_trip(tmp_path):
    frames = [rand_frame(seed=i, t=float(t)) for i, t in enumerate([0.0, 1.0, 2.5, 7.0])]
    seq = FlowSequence(frames=frames, dx=4.0, width=24, height=16)
    manifest = write_sequence(seq, tmp_path / "seq")
    back = read_sequence(manifest)
    assert back.timestamps == [0.0, 1.0, 2.5, 7.0]
    assert (back.dx, back.width, back.height) == (4.0, 24, 16)
    for a, b in zip(seq.frames, back.frames):
        np.testing.assert_array_equal(a.uv, b.uv)
    meta = json.loads(manifest.read_text())
    assert set(meta) == {"frames", "dx", "width", "height"}


def test_sequence_rejects_bad_timestamps():
    frames = [rand_frame(t=0.0), rand_frame(t=0.0)]
    with pytest.raises(ValueError, match="strictly"):
        FlowSequence(frames=frames, dx=4.0, width=24, height=16)
    with pytest.raises(ValueError):
        FlowSequence(frames=[], dx=4.0, width=24, height=16)


def test_sequence_rejects_mixed_sizes():
    with pytest.raises(DimMismatch):
        FlowSequence(
            frames=[rand_frame(), rand_frame(w=10, h=10, t=1.0)],
            dx=4.0, width=24, height=16,
        )


# --- grid conversion -------------------------------------------------------


def test_constant_flow_to_field():
    f = const_frame(1.0, 0.0)
    spec = GridSpec.for_image(f.width, f.height, 4.0)
    field = flow_to_field(f, spec)
    # nodes inside the pixel-covered region reproduce the constant exactly
    np.testing.assert_allclose(field.values[3:-3, 3:-3, 0], 1.0, atol=1e-12)
    np.testing.assert_allclose(field.values[..., 1], 0.0, atol=1e-12)


def test_zero_flow_zero_field():
    f = const_frame(0.0, 0.0)
    spec = GridSpec.for_image(f.width, f.height, 4.0)
    assert np.abs(flow_to_field(f, spec).values).max() == 0.0


def test_flow_to_field_conserves_momentum():
    f = rand_frame(w=32, h=32, seed=3)
    spec = GridSpec.for_image(f.width, f.height, 4.0)
    field = flow_to_field(f, spec)
    # recompute node masses the same way to weight the velocities
    from crowdmpm.core import stencils_for

    st = stencils_for(f.pixel_centers(), spec)
    mass = np.zeros(spec.n_nodes)
    np.add.at(mass, st.flat_idx.reshape(-1), st.weights.reshape(-1))
    node_mom = (mass[:, None] * field.values.reshape(-1, 2)).sum(0)
    pix_mom = f.uv.reshape(-1, 2).sum(0)
    assert np.abs(node_mom - pix_mom).max() / np.abs(pix_mom).max() < 1e-9


def test_checkerboard_smooths_below_unit():
    h = w = 32
    rows, cols = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    sign = np.where((rows + cols) % 2 == 0, 1.0, -1.0)
    uv = np.stack([sign, np.zeros_like(sign)], axis=-1)
    f = FlowFrame(width=w, height=h, uv=uv)
    spec = GridSpec.for_image(w, h, 4.0)
    field = flow_to_field(f, spec)
    assert np.abs(field.values).max() < 1.0


def test_round_trip_constant_identity():
    f = const_frame(0.7, -0.3)
    spec = GridSpec.for_image(f.width, f.height, 4.0)
    back = field_to_flow(flow_to_field(f, spec), f.width, f.height)
    np.testing.assert_allclose(back.uv, f.uv, atol=1e-12)


def test_round_trip_reduces_noise_variance():
    f = rand_frame(w=48, h=48, seed=5)
    spec = GridSpec.for_image(f.width, f.height, 4.0)
    back = field_to_flow(flow_to_field(f, spec), f.width, f.height)
    assert back.uv.var() < f.uv.var()
    # smoothing never amplifies the extremes
    assert np.abs(back.uv).max() <= np.abs(f.uv).max() + 1e-9


def test_conversions_are_linear():
    a, b = rand_frame(seed=1), rand_frame(seed=2)
    spec = GridSpec.for_image(a.width, a.height, 4.0)
    fa, fb = flow_to_field(a, spec), flow_to_field(b, spec)
    combo = FlowFrame(width=a.width, height=a.height, uv=a.uv + b.uv)
    f_combo = flow_to_field(combo, spec)
    np.testing.assert_allclose(f_combo.values, fa.values + fb.values, atol=1e-9)

    s1 = field_to_flow(fa, a.width, a.height).uv + field_to_flow(fb, a.width, a.height).uv
    both = type(fa)(fa.spec, fa.values + fb.values)
    s2 = field_to_flow(both, a.width, a.height).uv
    np.testing.assert_allclose(s1, s2, atol=1e-12)


def test_masked_pixels_do_not_contribute():
    f = const_frame(2.0, 0.0, w=16, h=16)
    f.uv[5, 5] = [1e6, 1e6]  # absurd value that the mask must suppress
    f.mask[5, 5] = False
    spec = GridSpec.for_image(f.width, f.height, 4.0)
    field = flow_to_field(f, spec)
    assert np.abs(field.values[..., 0]).max() <= 2.0 + 1e-9


# --- noise injection -------------------------------------------------------


def test_zero_noise_is_identity():
    f = rand_frame()
    for spec in (NoiseSpec("gaussian", std=0.0), NoiseSpec("uniform", prob=0.0)):
        g = inject_noise(f, spec)
        np.testing.assert_array_equal(g.uv, f.uv)


def test_gaussian_noise_statistics():
    f = const_frame(0.0, 0.0, w=1000, h=500)
    g = inject_noise(f, NoiseSpec("gaussian", std=1.0, seed=1))
    s = (g.uv - f.uv).std()
    assert 0.99 < s < 1.01


def test_uniform_noise_support():
    f = const_frame(0.0, 0.0, w=200, h=200)
    g = inject_noise(f, NoiseSpec("uniform", prob=1.0, seed=2))
    d = g.uv - f.uv
    assert d[..., 0].min() >= -0.7 and d[..., 0].max() <= 0.7
    assert d[..., 1].min() >= -0.8 and d[..., 1].max() <= 0.8
    assert np.abs(d).max() > 0


def test_uniform_noise_hit_rate():
    f = const_frame(0.0, 0.0, w=400, h=400)
    g = inject_noise(f, NoiseSpec("uniform", prob=0.25, seed=3))
    hit = (np.abs(g.uv - f.uv).max(axis=-1) > 0).mean()
    assert abs(hit - 0.25) < 0.01


def test_noise_is_seeded():
    f = rand_frame()
    a = inject_noise(f, NoiseSpec("mixture", std=0.5, prob=0.5, seed=9))
    b = inject_noise(f, NoiseSpec("mixture", std=0.5, prob=0.5, seed=9))
    c = inject_noise(f, NoiseSpec("mixture", std=0.5, prob=0.5, seed=10))
    np.testing.assert_array_equal(a.uv, b.uv)
    assert np.abs(a.uv - c.uv).max() > 0


def test_noise_respects_mask():
    f = rand_frame(w=16, h=16)
    f.mask[3, 4] = False
    g = inject_noise(f, NoiseSpec("gaussian", std=2.0, seed=4))
    np.testing.assert_array_equal(g.uv[3, 4], f.uv[3, 4])
    assert not g.mask[3, 4]


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        NoiseSpec("salt")
