"""Jump chain: kernel construction and the backward dynamic program.

Kernel oracles are hand-built two-node transports; solve oracles are the
zero-reward and frozen-dynamics cases, whose values are known in closed form
(zero, and one-step dt * max_a r respectively).
"""
from __future__ import annotations

import numpy as np
import pytest

from jumplimit.errors import NumericalError, StabilityError
from jumplimit.jump import (
    apply_jump_step,
    build_jump_kernel,
    evaluate_fixed_policy_on_chain,
    solve_jump_hjb,
)
from jumplimit.meshes import SpaceMesh, TimeMesh, default_jump_meshes
from jumplimit.model import (
    make_auction_model,
    make_coefficient,
    make_control_grid,
    make_reward,
)
from jumplimit.surfaces import PolicySurface

# frozen dynamics: both jump coefficients scaled to zero, chain never moves
FROZEN = make_auction_model(dynamics_scale=0.0)


def _tiny_model(drift_value: float):
    """Constant drift, two-node noise scaled to zero, two controls."""
    model = make_auction_model(dynamics_scale=0.0, noise_nodes=2)
    drift = make_coefficient("constant", value=drift_value)
    return model.replace(drift=drift, controls=make_control_grid(0.0, 0.5, 2))


def test_identity_kernel_rows():
    # single noise node so the row mass is one float, not a 41-term sum
    model = make_auction_model(dynamics_scale=0.0, noise_nodes=1)
    mesh = SpaceMesh(-0.5, 0.25, 15)
    kernel = build_jump_kernel(model, 0.5, mesh)
    for i in (0, 7, 14):
        idx, probs, absorbed = kernel.row(i, 3)
        assert idx.tolist() == [i]
        assert probs.tolist() == [1.0]
        assert absorbed == 0.0


def test_on_node_destination_single_entry():
    # eps * drift == dx exactly: every jump lands one node to the right
    mesh = SpaceMesh(0.0, 0.125, 9)
    kernel = build_jump_kernel(_tiny_model(drift_value=0.25), 0.5, mesh)
    idx, probs, absorbed = kernel.row(3, 0)
    assert idx.tolist() == [4]
    assert probs.tolist() == [1.0]
    assert absorbed == 0.0


def test_split_destination_two_entries():
    # eps * drift == 1.5 dx: mass splits half-half between the bracketing nodes
    mesh = SpaceMesh(0.0, 0.125, 9)
    kernel = build_jump_kernel(_tiny_model(drift_value=0.375), 0.5, mesh)
    idx, probs, absorbed = kernel.row(2, 0)
    assert idx.tolist() == [3, 4]
    assert probs.tolist() == [0.5, 0.5]
    assert absorbed == 0.0


def test_mass_beyond_boundary_is_absorbed():
    mesh = SpaceMesh(0.0, 0.125, 9)
    kernel = build_jump_kernel(_tiny_model(drift_value=0.25), 0.5, mesh)
    idx, probs, absorbed = kernel.row(8, 0)  # jumps past the last node
    assert idx.size == 0
    assert absorbed == 1.0


def test_kernel_rows_are_stochastic_auction():
    model = make_auction_model()
    space, _ = default_jump_meshes(model.domain, 0.1)
    kernel = build_jump_kernel(model, 0.1, space)
    assert kernel.stochasticity_defect() <= 1e-12


def test_kernel_support_radius():
    model = make_auction_model()
    eps = 0.1
    space, _ = default_jump_meshes(model.domain, eps)
    kernel = build_jump_kernel(model, eps, space)
    # |jump| <= eps sup|drift| + sqrt(eps) sup|noise|, plus one cell of rounding
    reach = eps * 2.925 + np.sqrt(eps) * 0.1
    nodes = space.nodes
    for i in (0, space.n // 2, space.n - 1):
        for m in (0, 150, 300):
            idx, _, _ = kernel.row(i, m)
            if idx.size:
                span = np.abs(nodes[idx] - nodes[i]).max()
                assert span <= reach + space.dx + 1e-12


def test_one_step_value_is_dt_times_best_reward():
    mesh = SpaceMesh(-0.5, 0.25, 15)
    tm = TimeMesh.from_step(0.3, 0.3)
    surf, _ = solve_jump_hjb(FROZEN, 0.5, meshes=(mesh, tm))
    best = np.array(
        [np.max(FROZEN.reward.fn(x, FROZEN.controls.values)) for x in mesh.nodes]
    )
    expected = 0.3 * best
    expected[0] = expected[-1] = 0.0
    assert surf.values[0] == pytest.approx(expected, rel=1e-13, abs=1e-15)
    assert np.all(surf.values[-1] == 0.0)


def test_flat_reward_ties_pick_smallest_control():
    # reward exactly flat in the control beyond 0.3: argmax must stick to the
    # first maximizer, control index 30
    def flat(x, a):
        x, a = np.broadcast_arrays(x, a)
        return np.where(np.asarray(a) >= 0.3, 0.25, 0.0)

    model = FROZEN.replace(reward=make_reward("custom", fn=flat))
    mesh = SpaceMesh(-0.5, 0.25, 15)
    tm = TimeMesh.from_step(0.3, 0.1)
    _, pol = solve_jump_hjb(model, 0.5, meshes=(mesh, tm))
    assert np.all(pol.indices == 30)


def test_zero_reward_gives_zero_surface():
    model = make_auction_model().replace(reward=make_reward("zero"))
    surf, _ = solve_jump_hjb(model, 0.1)
    assert np.all(surf.values == 0.0)


def test_value_bounds_auction():
    # bidding 0 earns exactly 0 forever, so 0 <= V <= (best static income) * T
    surf, _ = solve_jump_hjb(make_auction_model(), 0.1)
    dt = surf.times[1] - surf.times[0]
    assert surf.values.min() >= -1e-12
    assert surf.values.max() <= 0.35 * (1.0 + dt) + 1e-10


def test_boundary_columns_zero():
    surf, _ = solve_jump_hjb(make_auction_model(), 0.1)
    assert np.all(surf.values[:, 0] == 0.0)
    assert np.all(surf.values[:, -1] == 0.0)


def test_stability_guard():
    mesh = SpaceMesh(-0.5, 0.25, 15)
    tm = TimeMesh.from_step(1.0, 0.2)  # dt / eps = 2 > 1
    with pytest.raises(StabilityError) as exc:
        solve_jump_hjb(make_auction_model(), 0.1, meshes=(mesh, tm))
    assert "0.2" in str(exc.value)


def test_non_finite_reward_raises_numerical_error():
    bad = make_auction_model().replace(
        reward=make_reward(
            "custom", fn=lambda x, a: np.where(np.asarray(x) > 2.9, np.nan, 0.1)
        )
    )
    with pytest.raises(NumericalError):
        solve_jump_hjb(bad, 0.1)


def test_step_monotonicity_random_fixtures():
    """Raising any entry of the incoming slice never lowers the outgoing one."""
    rng = np.random.default_rng(11)
    for trial in range(100):
        n = int(rng.integers(5, 25))
        n_a = int(rng.integers(1, 5))
        n_k = int(rng.integers(1, 6))
        eps = float(rng.uniform(0.05, 1.0))
        mesh = SpaceMesh(float(rng.uniform(-2, 0)), float(rng.uniform(0.05, 0.3)), n)
        model = make_auction_model(noise_nodes=n_k).replace(
            drift=make_coefficient("constant", value=float(rng.uniform(-1, 1))),
            noise=make_coefficient("noise", scale=float(rng.uniform(0, 0.5))),
            controls=make_control_grid(0.0, 0.1, n_a),
        )
        kernel = build_jump_kernel(model, eps, mesh)
        eps_r = rng.uniform(-1, 1, size=(n, n_a)) * eps
        q = float(rng.uniform(0.1, 1.0))  # dt/eps, kept inside (0, 1]
        v = rng.uniform(-1, 1, size=n)
        v_out, _ = apply_jump_step(kernel, v, eps_r, q)
        w = v.copy()
        w[int(rng.integers(0, n))] += float(rng.uniform(0.1, 2.0))
        w_out, _ = apply_jump_step(kernel, w, eps_r, q)
        assert np.all(w_out >= v_out - 1e-13), f"trial {trial}"


def test_fixed_policy_matches_value_for_argmax_policy():
    model = make_auction_model()
    surf, pol = solve_jump_hjb(model, 0.1)
    fixed = evaluate_fixed_policy_on_chain(model, 0.1, pol)
    assert np.abs(fixed.values - surf.values).max() <= 1e-12


def test_fixed_policy_never_beats_value():
    model = make_auction_model()
    surf, pol = solve_jump_hjb(model, 0.1)
    rng = np.random.default_rng(5)
    worse = rng.integers(0, model.controls.n_controls, size=pol.indices.shape)
    bad_pol = PolicySurface(pol.times, pol.mesh, worse, model.controls)
    fixed = evaluate_fixed_policy_on_chain(model, 0.1, bad_pol)
    assert np.all(fixed.values <= surf.values + 1e-10)


def test_fixed_policy_accepts_feedback_rule():
    model = make_auction_model()
    fixed_a = evaluate_fixed_policy_on_chain(model, 0.1, lambda t, x: 0.3)
    _, pol = solve_jump_hjb(model, 0.1)
    const = np.full_like(pol.indices, 30)
    fixed_b = evaluate_fixed_policy_on_chain(
        model, 0.1, PolicySurface(pol.times, pol.mesh, const, model.controls)
    )
    assert np.abs(fixed_a.values - fixed_b.values).max() <= 1e-14
