"""Pure-numpy implementations of the hot kernels.

These mirror ``_fused.pyx`` operation for operation.  The elementwise step
kernels use the same association order as the compiled loops so both
backends produce bit-identical trajectories; the lattice reduction may
differ from the compiled one at the last few ulps (summation order).
"""

import numpy as np

BACKEND = "python"


def lattice_cos_sum(x1, x2, n1, n2, w):
    """out[i] = sum_k w[k] * cos(n1[k] * x1[i] + n2[k] * x2[i])."""
    out = np.empty(x1.shape[0])
    # chunk over modes to bound temporary size
    step = max(1, 2_000_000 // max(1, x1.shape[0]))
    for i in range(x1.shape[0]):
        acc = 0.0
        for lo in range(0, n1.shape[0], 4096 * 64):
            hi = min(lo + 4096 * 64, n1.shape[0])
            acc += float(np.dot(w[lo:hi], np.cos(n1[lo:hi] * x1[i] + n2[lo:hi] * x2[i])))
        out[i] = acc
    del step
    return out


def wave_step(u, v, a11, a12, a21, a22, w1, f, nu, nv, out_u, out_v):
    """One exact-linear step of the damped-wave pair with drift and noise.

    out_u = (a11*u + a12*v) + (w1*f + nu)
    out_v = (a21*u + a22*v) + (a12*f + nv)
    """
    np.copyto(out_u, (a11 * u + a12 * v) + (w1 * f + nu))
    np.copyto(out_v, (a21 * u + a22 * v) + (a12 * f + nv))


def heat_step(u, a, w, f, nu, out_u):
    """out_u = a*u + (w*f + nu)."""
    np.copyto(out_u, a * u + (w * f + nu))
