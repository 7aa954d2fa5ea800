"""Low-level in-place amplitude kernels.

Every kernel addresses amplitudes through a set of *fixed* bit positions.
Indices whose fixed bits equal ``value`` are enumerated by inserting zero
bits into a counter, so each kernel touches only the affected amplitudes.
"""

import os

import numpy as np
from numba import config, njit, prange

if "NUMBA_THREADING_LAYER" not in os.environ:
    # TBB builds in the wild are often too old; the portable layers always work
    config.THREADING_LAYER = "workqueue" if (os.cpu_count() or 1) == 1 else "default"


@njit(cache=True, inline="always")
def _spread(k, positions):
    # insert a zero bit at every (ascending) position
    k = np.int64(k)
    for p in positions:
        low = k & ((1 << p) - 1)
        k = ((k >> p) << (p + 1)) | low
    return k


@njit(cache=True, parallel=True)
def pair_kernel(psi, n_free, positions, value, flip, m00, m01, m10, m11):
    """2x2 unitary on amplitude pairs (i, i ^ flip) with i matching ``value``."""
    for k in prange(np.int64(1) << n_free):
        i = _spread(k, positions) | value
        j = i ^ flip
        a = psi[i]
        b = psi[j]
        psi[i] = m00 * a + m01 * b
        psi[j] = m10 * a + m11 * b


@njit(cache=True, parallel=True)
def phase_kernel(psi, n_free, positions, value, phase):
    for k in prange(np.int64(1) << n_free):
        i = _spread(k, positions) | value
        psi[i] *= phase


@njit(cache=True, parallel=True)
def block_kernel(psi, n, act_start, n_act, sel_positions, mats):
    """Dense per-selector matrices on a contiguous qubit range.

    ``mats[s]`` acts on qubits ``[act_start, act_start + n_act)`` for every
    amplitude slice whose selector bits read ``s`` (bit t of ``s`` taken from
    ``sel_positions[t]``).
    """
    dim = np.int64(1) << n_act
    lo_dim = np.int64(1) << act_start
    n_outer = np.int64(1) << (n - n_act)
    for o in prange(n_outer):
        lo = o & (lo_dim - 1)
        hi = o >> act_start
        base = lo | (hi << (act_start + n_act))
        s = 0
        for t in range(sel_positions.shape[0]):
            s |= ((base >> sel_positions[t]) & 1) << t
        buf = np.empty(dim, dtype=psi.dtype)
        for a in range(dim):
            buf[a] = psi[base | (a << act_start)]
        m = mats[s]
        for a in range(dim):
            acc = 0j
            for b in range(dim):
                acc += m[a, b] * buf[b]
            psi[base | (a << act_start)] = acc
