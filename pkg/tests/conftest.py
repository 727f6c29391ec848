"""Shared fixtures. The paper-scale preset runs (N = 199, T up to 200) take
tens of seconds each, so they are simulated once per session and shared
between the acceptance tests."""
from __future__ import annotations

import numpy as np
import pytest

from dynwave import cli, discretize, integrate, lyapunov


class PresetRun:
    """One simulated preset with everything the tests need precomputed."""

    def __init__(self, name: str):
        cfg = cli.preset_config(name)
        self.cfg = cfg
        self.grid = discretize.build_grid(cfg.N)
        self.params = cfg.physical()
        self.variant = cfg.boundary_variant()
        self.sys = discretize.build_system(self.grid, self.params, self.variant)
        self.dt = cli.resolve_dt(cfg, self.sys)
        ctrl = None
        if cfg.kp != 0.0 or cfg.alpha2 != 0.0:
            ctrl = integrate.PIController(kp=cfg.kp, ki=cfg.alpha2, y_ref=cfg.v1_ref)
        ic = cli._initial_state(cfg, self.grid.n + 1)
        self.traj = integrate.simulate(self.sys, ctrl, ic, self.dt, cfg.T,
                                       cfg.sample_stride)
        self.u, self.udot, self.eta2, self.ustar = cli.shifted_trajectory(
            cfg, self.grid, self.params, self.traj)
        self.ell = (lyapunov.choose_ell(self.params, self.variant)
                    if self.params.q_lower > 0.0 else 0.0)

    def hamiltonian(self) -> np.ndarray:
        """Discrete energy 1/2 udot'E udot + 1/2 u'Ku on the raw samples."""
        t = self.traj
        return 0.5 * np.einsum("ki,i,ki->k", t.udot_samples, self.sys.E, t.udot_samples) \
            + 0.5 * np.einsum("ki,ij,kj->k", t.u_samples, self.sys.K, t.u_samples)


@pytest.fixture(scope="session")
def preset_run():
    cache = {}

    def get(name: str) -> PresetRun:
        if name not in cache:
            cache[name] = PresetRun(name)
        return cache[name]

    return get
