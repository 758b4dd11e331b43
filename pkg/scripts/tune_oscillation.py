"""Scratch tuning driver for the axial-oscillation phenomenology invariant.

Runs the uncontrolled BOC 100->50 %NP step for 48 h and reports the AO peak
period and successive-peak prominence ratios for a grid of shape-stiffness
settings. Not part of the package; used once to freeze preset values.
"""

import sys
import time

import numpy as np
from scipy.signal import find_peaks

import pwradvisor as pa
from pwradvisor import plant
from pwradvisor.state import ControlInput, PowerProfile, ProfileSegment


def run_case(params, hours=48.0, h=10.0, step_to=0.5, rate=60.0):
    eq = plant.equilibrium(1.0, params.z_ref, params)
    profile = PowerProfile(initial=100.0, segments=(
        ProfileSegment(start=600.0, target=step_to * 100.0, rate=rate),))
    n_steps = int(hours * 3600 / h)
    states = [eq]
    s = eq
    zero = ControlInput(q=0.0)
    for _ in range(n_steps):
        s = plant.step(s, zero, h, params, profile=profile)
        states.append(s)
    t = np.array([st.t for st in states])
    ao = np.array([st.AO for st in states])
    z = np.array([st.z for st in states])
    n = np.array([st.n for st in states])
    xm = np.array([st.x_mean for st in states])
    return t, ao, z, n, xm


def analyze(t, ao, settle_h=6.0):
    sel = t >= settle_h * 3600
    tt, aa = t[sel], ao[sel]
    peaks, props = find_peaks(aa, prominence=0.5)
    out = []
    for i, p in enumerate(peaks):
        out.append((tt[p] / 3600, aa[p], props["prominences"][i]))
    return out


if __name__ == "__main__":
    base = pa.preset("boc")
    w_xax = float(sys.argv[1]) if len(sys.argv) > 1 else base.W_Xax
    w_ax = float(sys.argv[2]) if len(sys.argv) > 2 else base.w_ax
    params = base.with_overrides(W_Xax=w_xax, w_ax=w_ax)
    t0 = time.time()
    t, ao, z, n, xm = run_case(params)
    print(f"run took {time.time()-t0:.1f} s")
    print(f"W_Xax={w_xax} w_ax={w_ax}  AO range [{ao.min():.2f}, {ao.max():.2f}]")
    print(f"z range [{z.min():.1f}, {z.max():.1f}]  n end {n[-1]:.4f} xm end {xm[-1]:.4f}")
    pk = analyze(t, ao)
    for h_, v, prom in pk:
        print(f"  peak at {h_:7.2f} h  AO={v:7.3f}  prom={prom:6.3f}")
    if len(pk) >= 2:
        periods = [b[0] - a[0] for a, b in zip(pk, pk[1:])]
        ratios = [b[2] / a[2] for a, b in zip(pk, pk[1:])]
        print("periods (h):", [f"{p:.1f}" for p in periods])
        print("prominence ratios:", [f"{r:.3f}" for r in ratios])
