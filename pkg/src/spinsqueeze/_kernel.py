"""Fused Euler-Maruyama update over the flat collective state.

One call reads ``src`` and writes the renormalized successor into ``dst``.
Reductions run serially over the ``N + 1`` diagonal elements in a fixed order;
the element-wise map is parallel over ``n_dd`` blocks and touches each output
once, so results do not depend on the thread count.

For fixed ``(n_dd, n_du)`` the ``n_ud`` run is contiguous in memory, and so
are the runs it feeds from in the neighbouring ``n_dd`` blocks.
"""

import math

import numpy as np
from numba import config, njit, prange

# prefer OpenMP; probing an outdated TBB first only produces a warning
config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]

# smallest normal double; results below it are flushed to zero
_TINY = 2.2250738585072014e-308


@njit(cache=True, inline="always")
def _flat(N, n_ud, n_du, n_dd):
    M = N - n_dd
    K = M - n_du
    a = N + 3
    b = M + 3
    c = M + 2
    d = K + 2
    return (a * (a - 1) * (a - 2) - b * (b - 1) * (b - 2)) // 6 + (c * (c - 1) - d * (d - 1)) // 2 + n_ud


@njit(cache=True, inline="always")
def _weighted(logc, v):
    if v == 0.0:
        return 0.0
    if v > 0.0:
        return math.exp(logc + math.log(v))
    return -math.exp(logc + math.log(-v))


@njit(cache=True, inline="always")
def _ftz(x):
    if abs(x) < _TINY:
        return 0.0
    return x


@njit(cache=True, inline="always")
def _element(src, N, n_ud, n_du, n_dd, rot, coh, decay, pump, coll, xu, xd, dt, dw, bsum):
    n_uu = N - n_ud - n_du - n_dd
    i = _flat(N, n_ud, n_du, n_dd)
    a = src[i]
    diff = n_du - n_ud
    lin = complex(-coh * (n_ud + n_du) - decay * n_uu - pump * n_dd - coll * diff * diff, -rot * diff)
    acc = lin * a
    if decay != 0.0 and n_dd > 0:
        acc += decay * n_dd * src[_flat(N, n_ud, n_du, n_dd - 1)]
    if pump != 0.0 and n_uu > 0:
        acc += pump * n_uu * src[_flat(N, n_ud, n_du, n_dd + 1)]
    out = a + dt * acc
    if dw != 0.0:
        up_row = n_uu + n_du
        up_col = n_uu + n_ud
        b = (xd * up_row + xu * (N - up_row)) + (xd.conjugate() * up_col + xu.conjugate() * (N - up_col))
        out += dw * (b - bsum) * a
    return out


@njit(cache=True)
def diagonal_reductions(src, N, logc, xu_re, xd_re):
    """Trace and unnormalized ``<b_m + b_m^dagger>`` from the diagonal sector."""
    tr = 0.0
    bs = 0.0
    for l in range(N + 1):
        w = _weighted(logc[l], src[_flat(N, 0, 0, N - l)].real)
        tr += w
        bs += w * 2.0 * (xu_re * (N - l) + xd_re * l)
    return tr, bs


@njit(cache=True, parallel=True)
def em_step(src, dst, N, logc, rot, coh, decay, pump, coll, xu, xd, dt, dw, renorm):
    """Advance ``src`` by one step into ``dst``.

    Returns ``(trace_before_renormalization, <b + b^dagger>, trace_of_src)``.
    ``dw`` is the Wiener increment of the backaction term (zero switches the
    measurement off).
    """
    tr0, bs0 = diagonal_reductions(src, N, logc, xu.real, xd.real)
    bsum = bs0 / tr0

    tr1 = 0.0
    for l in range(N + 1):
        v = _element(src, N, 0, 0, N - l, rot, coh, decay, pump, coll, xu, xd, dt, dw, bsum)
        tr1 += _weighted(logc[l], v.real)
    scale = 1.0 / tr1 if renorm else 1.0

    # b = b0 + b1 * n_ud along a run; b0 depends on (n_dd, n_du).  Complex
    # products are spelled out on (re, im) pairs: numba's complex multiply
    # carries inf/nan recovery branches that block vectorization.
    sr = src.view(np.float64)
    dr = dst.view(np.float64)
    b1r = dw * (xu.real - xd.real)
    b1i = dw * (xu.imag - xd.imag)
    for n_dd in prange(N + 1):
        M = N - n_dd
        for n_du in range(M + 1):
            base = 2 * _flat(N, 0, n_du, n_dd)
            base_dec = 2 * _flat(N, 0, n_du, n_dd - 1) if n_dd > 0 else 0
            base_pump = 2 * _flat(N, 0, n_du, n_dd + 1) if n_dd < N else 0
            up_col = M - n_du
            b0 = dw * (
                xd * M + xu * (N - M) + xd.conjugate() * up_col + xu.conjugate() * (N - up_col) - bsum
            )
            f0r = 1.0 + b0.real - dt * (coh * n_du + decay * (M - n_du) + pump * n_dd)
            f0i = b0.imag - dt * rot * n_du
            run = M - n_du + 1
            dec_w = dt * decay * n_dd if n_dd > 0 else 0.0
            for n_ud in range(run):
                diff = n_du - n_ud
                # decay * n_uu = decay * (M - n_du) - decay * n_ud
                fr = f0r + n_ud * (b1r - dt * (coh - decay)) - dt * coll * diff * diff
                fi = f0i + n_ud * (b1i + dt * rot)
                j = base + 2 * n_ud
                ar = sr[j]
                ai = sr[j + 1]
                vr = fr * ar - fi * ai
                vi = fr * ai + fi * ar
                if dec_w != 0.0:
                    k = base_dec + 2 * n_ud
                    vr += dec_w * sr[k]
                    vi += dec_w * sr[k + 1]
                n_uu = M - n_du - n_ud
                if pump != 0.0 and n_uu > 0:
                    w = dt * pump * n_uu
                    k = base_pump + 2 * n_ud
                    vr += w * sr[k]
                    vi += w * sr[k + 1]
                dr[j] = _ftz(vr * scale)
                dr[j + 1] = _ftz(vi * scale)
    return tr1, bsum, tr0
