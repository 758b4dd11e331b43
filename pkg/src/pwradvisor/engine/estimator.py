"""Iodine/xenon state estimation from measurable plant quantities.

Node concentrations cannot be measured; they are reconstructed by propagating
the iodine/xenon ODEs driven by the measured power and axial offset (node
fluxes ``p_j = n*(1 +/- AO/100)``), starting from the known equilibrium at
the beginning of the measurement history.
"""

from __future__ import annotations

import numpy as np

from .. import plant
from ..params import PlantParams
from ..state import CoreState

# measured-history columns
COL_T, COL_N, COL_AO, COL_CB, COL_Z, COL_TDEV = range(6)


class StateEstimator:
    """Incremental twin-model propagation of the four node concentrations."""

    def __init__(self, params: PlantParams, t0: float, n0: float, ao0: float):
        self.params = params
        self.t = t0
        p_t = n0 * (1.0 + ao0 / 100.0)
        p_b = n0 * (1.0 - ao0 / 100.0)
        self.ix = np.array([p_t, p_b,
                            plant.xenon_equilibrium(p_t, params),
                            plant.xenon_equilibrium(p_b, params)])
        self._p_prev = (p_t, p_b)

    def _deriv(self, ix: np.ndarray, p_t: float, p_b: float) -> np.ndarray:
        P = self.params
        f = P.lambda_X + P.sigma_bar
        mix = 1.0 / (P.gamma_X + P.gamma_I)
        i_t, i_b, x_t, x_b = ix
        return np.array([
            P.lambda_I * (p_t - i_t),
            P.lambda_I * (p_b - i_b),
            f * (P.gamma_X * p_t + P.gamma_I * i_t) * mix
            - (P.lambda_X + P.sigma_bar * p_t) * x_t,
            f * (P.gamma_X * p_b + P.gamma_I * i_b) * mix
            - (P.lambda_X + P.sigma_bar * p_b) * x_b,
        ])

    def advance(self, t: float, n: float, ao: float) -> None:
        """Propagate to the next measurement (linear flux interpolation)."""
        h = t - self.t
        if h <= 0.0:
            return
        p_t1 = n * (1.0 + ao / 100.0)
        p_b1 = n * (1.0 - ao / 100.0)
        p_t0, p_b0 = self._p_prev
        p_tm, p_bm = 0.5 * (p_t0 + p_t1), 0.5 * (p_b0 + p_b1)
        y = self.ix
        k1 = self._deriv(y, p_t0, p_b0)
        k2 = self._deriv(y + 0.5 * h * k1, p_tm, p_bm)
        k3 = self._deriv(y + 0.5 * h * k2, p_tm, p_bm)
        k4 = self._deriv(y + h * k3, p_t1, p_b1)
        self.ix = np.maximum(y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4), 0.0)
        self.t = t
        self._p_prev = (p_t1, p_b1)

    def concentrations(self) -> tuple[float, float, float, float]:
        return tuple(float(v) for v in self.ix)


def estimate_state(history: np.ndarray, params: PlantParams) -> CoreState:
    """Full state estimate from a measured history.

    ``history`` rows are ``(t, n, AO, C_B, z, T_dev)`` starting at a known
    equilibrium.  Directly measured fields are copied from the latest sample;
    iodine/xenon come from twin-model propagation.
    """
    history = np.asarray(history, dtype=float)
    if history.ndim != 2 or history.shape[0] == 0 or history.shape[1] < 6:
        raise ValueError("history must be a nonempty (N, 6) array")
    est = StateEstimator(params, history[0, COL_T], history[0, COL_N],
                         history[0, COL_AO])
    for row in history[1:]:
        est.advance(row[COL_T], row[COL_N], row[COL_AO])
    i_t, i_b, x_t, x_b = est.concentrations()
    last = history[-1]
    return CoreState(t=float(last[COL_T]), i_t=i_t, i_b=i_b, x_t=x_t, x_b=x_b,
                     C_B=float(last[COL_CB]), z=float(last[COL_Z]),
                     T_dev=float(last[COL_TDEV]), n=float(last[COL_N]),
                     AO=float(last[COL_AO]), p_turb=float(last[COL_N]))
