"""Monte Carlo hot kernels: counter-based uniforms, inverse-CDF bisection,
and bounded-until path simulation over table-compiled models.

Two interchangeable implementations ship: a numba-compiled scalar loop over
paths and a vectorised pure-numpy lockstep fallback.  Selection is automatic
(numba when importable) and can be forced to the numpy path by setting the
environment variable ``SAMC_PURE_NUMPY=1``.  Both consume the same
counter-based random stream keyed by (seed, path index, draw index), so they
produce bit-identical results.
"""

from __future__ import annotations

import os

import numpy as np

_GOLD1 = 0x9E3779B97F4A7C15
_GOLD2 = 0xD1B54A32D192ED03
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK = 0xFFFFFFFFFFFFFFFF
_INV53 = 1.0 / 9007199254740992.0  # 2**-53

_BISECT_ITERS = 60  # halves any support below 1e-12 absolute width

_FLAG = "SAMC_PURE_NUMPY"


def numpy_fallback_forced() -> bool:
    return os.environ.get(_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}


def kernel_backend() -> str:
    """'numba' or 'numpy', honouring the env flag and numba availability."""
    if numpy_fallback_forced():
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        return "numpy"
    return "numba"


# --- counter-based uniforms (python-int reference) --------------------------


def mix64(value: int) -> int:
    z = value & _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def path_key(seed: int, path_index: int) -> int:
    return mix64((seed + _GOLD1 * (path_index + 1)) & _MASK)


def unit_uniform(key: int, counter: int) -> float:
    bits = mix64((key + _GOLD2 * (counter + 1)) & _MASK)
    return (bits >> 11) * _INV53


# --- numpy vectorised variants ----------------------------------------------

_U_GOLD1 = np.uint64(_GOLD1)
_U_GOLD2 = np.uint64(_GOLD2)
_U_MIX1 = np.uint64(_MIX1)
_U_MIX2 = np.uint64(_MIX2)


def _mix64_np(z):
    z = (z ^ (z >> np.uint64(30))) * _U_MIX1
    z = (z ^ (z >> np.uint64(27))) * _U_MIX2
    return z ^ (z >> np.uint64(31))


def path_keys_np(seed: int, n: int):
    idx = np.arange(1, n + 1, dtype=np.uint64)
    return _mix64_np(np.uint64(seed & _MASK) + _U_GOLD1 * idx)


def unit_uniform_np(keys, counters):
    bits = _mix64_np(keys + _U_GOLD2 * (counters.astype(np.uint64) + np.uint64(1)))
    return (bits >> np.uint64(11)).astype(np.float64) * _INV53


# --- kernels -----------------------------------------------------------------
#
# Model tables:
#   offsets      int64[n_locs + 1]     per-location clock slice into loc_clocks
#   loc_clocks   int64[.]              clock indices in setting order
#   fire_target  int64[n_locs, n_clocks]   target location, -1 when no edge
#   sat1, sat2   bool[n_locs]
#   piece_off    int64[n_clocks + 1]   per-clock piece slice
#   piece_hi     float64[n_pieces]
#   coefs        float64[n_pieces, max_order]  ascending, zero padded
#   sup_lo/hi    float64[n_clocks]


def _until_kernel_scalar(
    n_paths,
    seed,
    init_loc,
    offsets,
    loc_clocks,
    fire_target,
    sat1,
    sat2,
    c_bound,
    strict_time,
    piece_off,
    piece_hi,
    coefs,
    sup_lo,
    sup_hi,
    max_steps,
):
    sat = np.zeros(n_paths, np.bool_)
    err = np.zeros(n_paths, np.bool_)
    order = coefs.shape[1]
    for i in range(n_paths):
        key = np.uint64(seed) + _U_GOLD1 * np.uint64(i + 1)
        key = (key ^ (key >> np.uint64(30))) * _U_MIX1
        key = (key ^ (key >> np.uint64(27))) * _U_MIX2
        key = key ^ (key >> np.uint64(31))
        loc = init_loc
        t = 0.0
        ctr = np.uint64(0)
        steps = 0
        while True:
            if strict_time:
                time_ok = t < c_bound
            else:
                time_ok = t <= c_bound
            if sat2[loc] and time_ok:
                sat[i] = True
                break
            if not sat1[loc]:
                break
            k0 = offsets[loc]
            k1 = offsets[loc + 1]
            if k1 == k0:
                break  # terminating location: stuck without the goal
            best_d = 1.0e300
            best_clock = -1
            for j in range(k0, k1):
                ck = loc_clocks[j]
                z = key + _U_GOLD2 * (ctr + np.uint64(1))
                ctr = ctr + np.uint64(1)
                z = (z ^ (z >> np.uint64(30))) * _U_MIX1
                z = (z ^ (z >> np.uint64(27))) * _U_MIX2
                z = z ^ (z >> np.uint64(31))
                u = float(z >> np.uint64(11)) * _INV53
                lo = sup_lo[ck]
                hi = sup_hi[ck]
                for _ in range(_BISECT_ITERS):
                    mid = 0.5 * (lo + hi)
                    row = piece_off[ck + 1] - 1
                    for p in range(piece_off[ck], piece_off[ck + 1]):
                        if mid <= piece_hi[p]:
                            row = p
                            break
                    value = 0.0
                    for q in range(order - 1, -1, -1):
                        value = value * mid + coefs[row, q]
                    if value < u:
                        lo = mid
                    else:
                        hi = mid
                d = 0.5 * (lo + hi)
                if d < best_d:
                    best_d = d
                    best_clock = ck
            t = t + best_d
            if strict_time:
                beyond = t >= c_bound
            else:
                beyond = t > c_bound
            if beyond:
                break
            nxt = fire_target[loc, best_clock]
            if nxt < 0:
                err[i] = True
                break
            loc = nxt
            steps += 1
            if steps > max_steps:
                err[i] = True
                break
    return sat, err


_jit_kernel = None


def _get_jit_kernel():
    global _jit_kernel
    if _jit_kernel is None:
        from numba import njit

        _jit_kernel = njit(cache=False)(_until_kernel_scalar)
    return _jit_kernel


def _cdf_np(clock, t, piece_off, piece_hi, coefs):
    order = coefs.shape[1]
    result = np.empty_like(t)
    done = np.zeros(t.shape, np.bool_)
    last = piece_off[clock + 1] - 1
    for p in range(piece_off[clock], piece_off[clock + 1]):
        m = ~done & ((t <= piece_hi[p]) | (p == last))
        if m.any():
            value = np.zeros(int(m.sum()))
            tm = t[m]
            for q in range(order - 1, -1, -1):
                value = value * tm + coefs[p, q]
            result[m] = value
            done |= m
    return result


def _inverse_cdf_np(clock, u, piece_off, piece_hi, coefs, sup_lo, sup_hi):
    lo = np.full(u.shape, sup_lo[clock])
    hi = np.full(u.shape, sup_hi[clock])
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        below = _cdf_np(clock, mid, piece_off, piece_hi, coefs) < u
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _until_kernel_numpy(
    n_paths,
    seed,
    init_loc,
    offsets,
    loc_clocks,
    fire_target,
    sat1,
    sat2,
    c_bound,
    strict_time,
    piece_off,
    piece_hi,
    coefs,
    sup_lo,
    sup_hi,
    max_steps,
):
    keys = path_keys_np(seed, n_paths)
    loc = np.full(n_paths, init_loc, np.int64)
    t = np.zeros(n_paths)
    ctr = np.zeros(n_paths, np.uint64)
    sat = np.zeros(n_paths, np.bool_)
    err = np.zeros(n_paths, np.bool_)
    alive = np.ones(n_paths, np.bool_)
    n_locs = offsets.shape[0] - 1

    for _ in range(max_steps + 1):
        if not alive.any():
            break
        time_ok = (t < c_bound) if strict_time else (t <= c_bound)
        goal = alive & sat2[loc] & time_ok
        sat[goal] = True
        alive &= ~goal
        alive &= sat1[loc]
        alive &= (offsets[loc + 1] - offsets[loc]) > 0
        if not alive.any():
            break

        best_d = np.full(n_paths, np.inf)
        best_clock = np.full(n_paths, -1, np.int64)
        for location in range(n_locs):
            idxs = np.nonzero(alive & (loc == location))[0]
            if idxs.size == 0:
                continue
            k0 = int(offsets[location])
            k1 = int(offsets[location + 1])
            for j in range(k0, k1):
                ck = int(loc_clocks[j])
                u = unit_uniform_np(keys[idxs], ctr[idxs] + np.uint64(j - k0))
                d = _inverse_cdf_np(ck, u, piece_off, piece_hi, coefs, sup_lo, sup_hi)
                better = d < best_d[idxs]
                chosen = idxs[better]
                best_d[chosen] = d[better]
                best_clock[chosen] = ck
            ctr[idxs] += np.uint64(k1 - k0)

        t = np.where(alive, t + best_d, t)
        beyond = (t >= c_bound) if strict_time else (t > c_bound)
        alive &= ~beyond
        movers = np.nonzero(alive)[0]
        if movers.size:
            nxt = fire_target[loc[movers], best_clock[movers]]
            dead = nxt < 0
            err[movers[dead]] = True
            alive[movers[dead]] = False
            good = movers[~dead]
            loc[good] = nxt[~dead]
    else:
        err[alive] = True
        alive[:] = False
    return sat, err


def run_until_kernel(
    n_paths: int,
    seed: int,
    init_loc: int,
    offsets,
    loc_clocks,
    fire_target,
    sat1,
    sat2,
    c_bound: float,
    strict_time: bool,
    piece_off,
    piece_hi,
    coefs,
    sup_lo,
    sup_hi,
    max_steps: int = 10_000,
):
    """Simulate n bounded-until paths; returns (satisfied, error) masks."""
    args = (
        n_paths,
        seed & 0x7FFFFFFFFFFFFFFF,  # int64-safe for the jit signature
        init_loc,
        offsets,
        loc_clocks,
        fire_target,
        sat1,
        sat2,
        c_bound,
        strict_time,
        piece_off,
        piece_hi,
        coefs,
        sup_lo,
        sup_hi,
        max_steps,
    )
    if kernel_backend() == "numba":
        return _get_jit_kernel()(*args)
    return _until_kernel_numpy(*args)
