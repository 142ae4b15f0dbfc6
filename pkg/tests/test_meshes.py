"""Mesh-law oracles.

The jump meshes obey dx = eps^(3/2)/2 and dt = dx^(2/3), which makes dt/eps
equal to 2^(-2/3) identically in eps; values below are frozen from those
closed forms.
"""
from __future__ import annotations

import numpy as np
import pytest

from jumplimit.errors import ConfigurationError, ResourceError, StabilityError
from jumplimit.meshes import (
    SpaceMesh,
    TimeMesh,
    default_diffusion_meshes,
    default_jump_meshes,
)
from jumplimit.model import Domain

DOMAIN = Domain(-0.5, 3.0, 1.0)


def test_jump_mesh_eps_one():
    space, time = default_jump_meshes(DOMAIN, 1.0)
    assert space.dx == 0.5
    assert space.n == 8
    assert space.nodes[0] == -0.5 and space.nodes[-1] == 3.0
    assert time.dt == pytest.approx(2.0 ** (-2.0 / 3.0), rel=1e-13)


def test_jump_mesh_eps_hundredth():
    space, time = default_jump_meshes(DOMAIN, 1e-2)
    assert space.dx == 5e-4
    assert space.n == 7001  # 3.5 / 5e-4 + 1
    assert space.nodes[-1] == pytest.approx(3.0, abs=1e-12)


def test_time_step_to_eps_ratio_is_mesh_law_constant():
    const = 2.0 ** (-2.0 / 3.0)
    for eps in (1.0, 0.5, 1e-1, 10 ** -1.5, 1e-2, 1e-3):
        _, time = default_jump_meshes(DOMAIN, eps)
        assert time.dt / eps == pytest.approx(const, rel=1e-13)
        assert time.dt / eps <= 1.0 + 1e-12


def test_jump_mesh_rejects_bad_epsilon():
    with pytest.raises(ConfigurationError):
        default_jump_meshes(DOMAIN, 0.0)
    with pytest.raises(ConfigurationError):
        default_jump_meshes(DOMAIN, 1.5)


def test_node_cap_raises_resource_error_with_estimate():
    with pytest.raises(ResourceError) as exc:
        default_jump_meshes(DOMAIN, 1e-5)
    msg = str(exc.value)
    assert "nodes" in msg
    # the message must let the caller size the allocation: bytes mentioned
    assert "B" in msg or "byte" in msg


def test_node_cap_override():
    space, _ = default_jump_meshes(DOMAIN, 1e-4, node_cap=2**23)
    assert space.n > 2**22


def test_times_land_exactly_on_horizon():
    for eps in (1.0, 1e-1, 10 ** -1.5, 1e-2):
        _, time = default_jump_meshes(DOMAIN, eps)
        t = time.times
        assert t[0] == 0.0
        assert t[-1] == DOMAIN.horizon
        assert np.all(np.diff(t) > 0)
        # full steps except possibly the last, which is never longer
        assert np.all(np.diff(t) <= time.dt * (1 + 1e-12))
        assert time.n_steps * time.dt >= DOMAIN.horizon - time.dt


def test_time_mesh_exact_division():
    tm = TimeMesh.from_step(1.0, 1e-4)
    assert tm.n_steps == 10000
    assert tm.times[-1] == 1.0
    assert tm.times[1] == 1e-4


def test_time_mesh_shortened_last_step():
    tm = TimeMesh.from_step(1.0, 0.3)
    assert tm.n_steps == 4
    assert tm.times.tolist() == [0.0, 0.3, 0.6, 0.8999999999999999, 1.0]


def test_space_mesh_basics():
    mesh = SpaceMesh(-1.0, 0.25, 9)
    assert mesh.nodes[-1] == 1.0
    assert mesh.nearest_index(0.13) == 5  # 0.25 node wins over 0.0
    assert mesh.nearest_index(-5.0) == 0
    assert mesh.nearest_index(5.0) == 8
    with pytest.raises(ConfigurationError):
        SpaceMesh(0.0, -0.1, 5)
    with pytest.raises(ConfigurationError):
        SpaceMesh(0.0, 0.1, 1)


def test_default_diffusion_meshes():
    meshes = default_diffusion_meshes(DOMAIN)
    assert meshes.space.dx == 1e-2
    assert meshes.time.dt == 1e-4
    assert meshes.space.n == 351
    assert meshes.time.n_steps == 10000


def test_diffusion_mesh_custom_steps():
    meshes = default_diffusion_meshes(DOMAIN, dx=0.1)
    assert meshes.time.dt == pytest.approx(0.01, rel=1e-15)
    assert meshes.space.n == 36
