"""Quadratic B-spline interpolation properties on the grid."""

import numpy as np
import pytest

from crowdmpm.core import GridSpec, sample_field, stencils_for
from crowdmpm.errors import OutOfDomain


def random_positions(n, spec, rng, margin=1.5):
    lo = np.asarray(spec.origin) + margin * spec.dx
    hi_x = spec.origin[0] + (spec.nx - 1 - margin) * spec.dx
    hi_y = spec.origin[1] + (spec.ny - 1 - margin) * spec.dx
    return np.stack(
        [rng.uniform(lo[0], hi_x, n), rng.uniform(lo[1], hi_y, n)], axis=1
    )


def test_partition_of_unity():
    spec = GridSpec.for_domain(200, 150, 7.0)
    rng = np.random.default_rng(42)
    x = random_positions(10_000, spec, rng)
    st = stencils_for(x, spec)
    total = st.weights.sum(axis=(1, 2))
    assert np.abs(total - 1.0).max() < 1e-12


def test_weights_nonnegative():
    spec = GridSpec.for_domain(100, 100, 4.0)
    rng = np.random.default_rng(3)
    st = stencils_for(random_positions(5000, spec, rng), spec)
    assert st.weights.min() >= 0.0


def test_linear_reproduction():
    # interpolating f(x) = a + b.x from nodes recovers it exactly
    spec = GridSpec.for_domain(160, 120, 8.0)
    rng = np.random.default_rng(7)
    x = random_positions(10_000, spec, rng)
    st = stencils_for(x, spec)

    coords = spec.node_coords().reshape(-1, 2)
    a, b = 0.37, np.array([1.25, -0.85])
    nodal = a + coords @ b
    sampled = sample_field(nodal, st)
    exact = a + x @ b
    assert np.abs(sampled - exact).max() < 1e-10


def test_first_moment_vanishes():
    # sum_i w_ip (x_i - x_p) = 0: the kernel sees no fictitious drift
    spec = GridSpec.for_domain(90, 90, 3.0)
    rng = np.random.default_rng(11)
    st = stencils_for(random_positions(4000, spec, rng), spec)
    moment = (st.weights[..., None] * st.dpos).sum(axis=(1, 2))
    assert np.abs(moment).max() < 1e-12


def test_inertia_tensor_is_quarter_dx_squared():
    # sum_i w_ip dpos dpos^T = (dx^2/4) I, the APIC scaling assumption
    spec = GridSpec.for_domain(90, 90, 6.0)
    rng = np.random.default_rng(13)
    st = stencils_for(random_positions(2000, spec, rng), spec)
    inertia = np.einsum("nij,nija,nijb->nab", st.weights, st.dpos, st.dpos)
    expect = (spec.dx**2 / 4.0) * np.eye(2)
    assert np.abs(inertia - expect).max() < 1e-10


def test_affine_weight_gradients_match_exact_on_average():
    # the (4/dx^2) w dpos form equals the true tensor-product gradient
    # in the APIC force assembly identity: sum_i grad_w = 0 for both
    spec = GridSpec.for_domain(80, 80, 5.0)
    rng = np.random.default_rng(19)
    st = stencils_for(random_positions(1000, spec, rng), spec)
    affine = st.weight_gradients()
    exact = st.weight_gradients(exact=True)
    assert np.abs(affine.sum(axis=(1, 2))).max() < 1e-12
    assert np.abs(exact.sum(axis=(1, 2))).max() < 1e-12


def test_exact_weight_gradients_match_finite_differences():
    spec = GridSpec.for_domain(80, 80, 5.0)
    rng = np.random.default_rng(23)
    x = random_positions(50, spec, rng)
    st = stencils_for(x, spec)
    exact = st.weight_gradients(exact=True)
    h = 1e-6
    for axis in range(2):
        dx = np.zeros_like(x)
        dx[:, axis] = h
        wp = stencils_for(x + dx, spec).weights
        wm = stencils_for(x - dx, spec).weights
        fd = (wp - wm) / (2 * h)
        # gradient is w.r.t. node position = -d/dx_p
        assert np.abs(exact[..., axis] + fd).max() < 1e-6


def test_out_of_domain_raises_with_index():
    spec = GridSpec.for_domain(50, 50, 5.0)
    x = np.array([[25.0, 25.0], [4000.0, 25.0]])
    with pytest.raises(OutOfDomain, match="1"):
        stencils_for(x, spec)


def test_sample_vector_field():
    spec = GridSpec.for_domain(100, 100, 5.0)
    rng = np.random.default_rng(5)
    x = random_positions(500, spec, rng)
    st = stencils_for(x, spec)
    coords = spec.node_coords().reshape(-1, 2)
    A = np.array([[0.3, -0.1], [0.2, 0.4]])
    nodal = coords @ A.T
    sampled = sample_field(nodal, st)
    assert np.abs(sampled - x @ A.T).max() < 1e-10
