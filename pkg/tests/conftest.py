"""Shared fixtures: the flagship 1D problem at several resolutions.

Continuation runs are session-scoped because several acceptance criteria
interrogate the same converged state.
"""

from __future__ import annotations

import numpy as np
import pytest

from linfvar import (BoundaryData, ContinuationSchedule, EllipticMatrix,
                     LpEnergyConfig, build_grid, continuation_solve,
                     make_pure_xi)
from linfvar.oracle_1d import solve_exact

FLAGSHIP_DATA = (0.0, 1.0, 0.0, 0.0, 0.0, 1.0)   # a, b, ua, sa, ub, sb


def flagship_config(n_nodes: int) -> LpEnergyConfig:
    a, b, ua, sa, ub, sb = FLAGSHIP_DATA
    grid = build_grid(1, (a, b), [n_nodes])
    return LpEnergyConfig(
        p=2.0,
        spec=make_pure_xi(),
        A=EllipticMatrix(np.array([[1.0]])),
        data=BoundaryData.from_scalars_1d(ua, sa, ub, sb, a, b),
        grid=grid,
    )


def doubling_ladder(p_max: float) -> tuple:
    ladder = [2.0]
    while ladder[-1] < p_max:
        ladder.append(ladder[-1] * 2.0)
    return tuple(ladder)


@pytest.fixture(scope="session")
def oracle_pq():
    return solve_exact(*FLAGSHIP_DATA)


@pytest.fixture(scope="session")
def flagship_401():
    cfg = flagship_config(401)
    report = continuation_solve(cfg, ContinuationSchedule())
    return cfg, report


@pytest.fixture(scope="session")
def flagship_refinement():
    """Runs at N in {101, 201, 401} with the ladder top scaled with the
    resolution, for the residual-halving checks."""
    out = {}
    for n, p_max in ((101, 64.0), (201, 128.0), (401, 256.0)):
        cfg = flagship_config(n)
        sched = ContinuationSchedule(p_ladder=doubling_ladder(p_max))
        out[n] = (cfg, continuation_solve(cfg, sched))
    return out
