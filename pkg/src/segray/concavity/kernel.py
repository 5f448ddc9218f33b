"""Informational comparison for heat kernels started from a narrow Gaussian.

The initial data only approximates a point source, so the result is labelled
INDICATIVE and never gates a run.
"""

from __future__ import annotations

import numpy as np

from ..errors import WidthTooSmall
from ..geometry import ConvexDomain, diameter
from ..pde import build_operator, heat_solve, solve_1d_model
from .verify import VerificationReport, verify_comparison_parabolic

LABEL = "INDICATIVE"


def heat_kernel_spot_check(domain: ConvexDomain, q=None, z=None, qbar=None,
                           t_list=(0.3,), width: float | None = None,
                           h: float = 0.02, dt: float = 1e-3,
                           samples: int = 1000, cutoff: float = 0.02,
                           seed: int = 0, model_nodes: int = 2001
                           ) -> VerificationReport:
    if width is None:
        width = 3.0 * h
    if width < 3.0 * h:
        raise WidthTooSmall(f"width {width:g} below 3h = {3 * h:g}")
    t_list = sorted(float(t) for t in t_list)
    early = [t for t in t_list if t < 10.0 * width ** 2]
    if early:
        raise ValueError(f"times {early} are below 10 w^2 = {10 * width ** 2:g}")
    z = domain.seed_point if z is None else np.asarray(z, dtype=float)
    D = diameter(domain)
    op = build_operator(domain, q, h)
    d2 = np.sum((op.points - z) ** 2, axis=1)
    u0 = np.exp(-d2 / (2 * width ** 2))
    sol = heat_solve(op, u0, dt, t_list[-1], snapshots=t_list)
    model = solve_1d_model(qbar, D / 2, lambda s: np.exp(-s ** 2 / (2 * width ** 2)),
                           mode="heat", dt=dt, t_end=t_list[-1],
                           n_nodes=model_nodes, snapshots=t_list)
    rep = verify_comparison_parabolic(sol, model, q, domain, samples, t_list,
                                      cutoff, seed, check_initial=False,
                                      kind="heat-kernel", diameter_value=D)
    rep.meta.update({"label": LABEL, "width": width, "source": z.tolist(),
                     "h": h, "dt": dt})
    return rep
