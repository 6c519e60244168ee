"""Numba kernels behind the greedy lattice net.

The lattice lives on a flat, zero-padded uint8 grid. Cell states:
0 = not a candidate, 1 = candidate inside the body, 3 = candidate clamped
onto the boundary, 2 = blocked (within half the net radius of a chosen center).
"""

import numpy as np
from numba import njit

EMPTY = 0
INNER = 1
BLOCKED = 2
CLAMPED = 3

L2 = 0
LINF = 1


@njit(cache=True, nogil=True)
def _unit_norm(B, kind, c):
    d, w = B.shape
    if kind == L2:
        acc = 0.0
        for i in range(w):
            acc += c[i] * c[i]
        return np.sqrt(acc)
    best = 0.0
    for r in range(d):
        acc = 0.0
        for i in range(w):
            acc += B[r, i] * c[i]
        if acc < 0:
            acc = -acc
        if acc > best:
            best = acc
    return best


@njit(cache=True, nogil=True)
def _coords(flat, strides, pads, K, spacing, out):
    w = strides.shape[0]
    rem = flat
    for i in range(w):
        q = rem // strides[i]
        rem -= q * strides[i]
        out[i] = (q - pads[i] - K[i]) * spacing


@njit(cache=True, nogil=True)
def classify_cells(state, start, stop, shape, strides, pads, K, B, kind, spacing, clamp_limit):
    """Mark candidate cells in state[start:stop]; padding cells stay EMPTY."""
    w = strides.shape[0]
    c = np.empty(w)
    for flat in range(start, stop):
        rem = flat
        inside = True
        for i in range(w):
            q = rem // strides[i]
            rem -= q * strides[i]
            if q < pads[i] or q >= shape[i] - pads[i]:
                inside = False
                break
            c[i] = (q - pads[i] - K[i]) * spacing
        if not inside:
            continue
        nrm = _unit_norm(B, kind, c)
        if nrm <= 1.0:
            state[flat] = INNER
        elif nrm <= clamp_limit:
            state[flat] = CLAMPED


@njit(cache=True, nogil=True)
def _target_distance(state, tgt, g, vec, t, B, kind, spacing, p, q):
    """Unit-body distance from center p to the candidate at lattice g + vec[t]."""
    w = g.shape[0]
    for i in range(w):
        q[i] = (g[i] + vec[t, i]) * spacing
    if state[tgt] == CLAMPED:
        nrm = _unit_norm(B, kind, q)
        for i in range(w):
            q[i] /= nrm
    for i in range(w):
        q[i] -= p[i]
    return _unit_norm(B, kind, q)


@njit(cache=True, nogil=True)
def greedy_select(state, strides, pads, K, B, kind, spacing, half_radius,
                  near, near_vec, near_norm, ring_inner, ring_inner_vec,
                  ring_outer, ring_outer_vec):
    """Scan candidates in lexicographic order, keep any not yet blocked.

    `near` holds lex-positive flat offsets with lattice norm <= half_radius,
    `ring_inner` those up to 1.5 * half_radius and `ring_outer` up to
    2 * half_radius; the `_vec` arrays carry the same offsets as lattice
    vectors. Inner/inner pairs are decided from the lattice norm; any pair
    involving a clamped cell is measured exactly.
    """
    w = strides.shape[0]
    n = state.shape[0]
    chosen = np.empty(1024, dtype=np.int64)
    count = 0
    g = np.empty(w, dtype=np.int64)
    p = np.empty(w)
    q = np.empty(w)
    for flat in range(n):
        s = state[flat]
        if s != INNER and s != CLAMPED:
            continue
        if count == chosen.shape[0]:
            grown = np.empty(2 * count, dtype=np.int64)
            grown[:count] = chosen
            chosen = grown
        chosen[count] = flat
        count += 1
        center_clamped = s == CLAMPED
        rem = flat
        for i in range(w):
            c = rem // strides[i]
            rem -= c * strides[i]
            g[i] = c - pads[i] - K[i]
            p[i] = g[i] * spacing
        pn = _unit_norm(B, kind, p)
        if center_clamped:
            for i in range(w):
                p[i] /= pn
        state[flat] = BLOCKED

        for t in range(near.shape[0]):
            tgt = flat + near[t]
            ts = state[tgt]
            if ts == INNER and not center_clamped:
                if near_norm[t] <= half_radius:
                    state[tgt] = BLOCKED
            elif ts == INNER or ts == CLAMPED:
                if _target_distance(state, tgt, g, near_vec, t, B, kind, spacing, p, q) <= half_radius:
                    state[tgt] = BLOCKED
        # clamped cells sit outside the unit body, so an inner center deep
        # enough inside cannot reach one through the ring
        if not center_clamped and pn + 1.5 * half_radius * (1.0 + 1e-9) < 1.0:
            continue
        for t in range(ring_inner.shape[0]):
            tgt = flat + ring_inner[t]
            ts = state[tgt]
            if ts == CLAMPED or (ts == INNER and center_clamped):
                if _target_distance(state, tgt, g, ring_inner_vec, t, B, kind, spacing, p, q) <= half_radius:
                    state[tgt] = BLOCKED
        if center_clamped:
            for t in range(ring_outer.shape[0]):
                tgt = flat + ring_outer[t]
                if state[tgt] == CLAMPED:
                    if _target_distance(state, tgt, g, ring_outer_vec, t, B, kind, spacing, p, q) <= half_radius:
                        state[tgt] = BLOCKED
    return chosen[:count]
