"""Counter-based random streams.

Every atom owns the stream ``(seed, stream_id)``.  On the Python side a stream
is a :class:`numpy.random.Generator` backed by Philox-4x64-10 keyed with
``[seed, stream_id]``.  Inside compiled kernels the same generator is evaluated
statelessly: the ``k``-th double of a stream is a pure function of
``(seed, stream_id, k)``, so results never depend on how atoms are scheduled
across threads.  The jitted Philox reproduces numpy's output bit for bit.
"""

import math

import numba
import numpy as np

_U64_MASK = (1 << 64) - 1

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_LO32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_TWO_M53 = 1.0 / 9007199254740992.0


def _check_u64(name, value):
    value = int(value)
    if not 0 <= value <= _U64_MASK:
        raise ValueError(f"{name} must fit in an unsigned 64-bit integer, got {value}")
    return value


def rng_stream(seed, stream_id=0):
    """Return the reproducible generator for ``(seed, stream_id)``.

    Distinct stream ids give independent Philox keys; identical arguments give
    bit-identical sequences.
    """
    seed = _check_u64("seed", seed)
    stream_id = _check_u64("stream_id", stream_id)
    return np.random.Generator(np.random.Philox(key=seed | (stream_id << 64)))


def derive_seed(master_seed, index):
    """Deterministic child seed for sweep point ``index`` of ``master_seed``."""
    master_seed = _check_u64("master_seed", master_seed)
    word = rng_stream(master_seed, (1 << 63) | int(index)).bit_generator.random_raw()
    return int(word)


@numba.njit(inline="always")
def _mulhilo(a, b):
    a_lo = a & _LO32
    a_hi = a >> _S32
    b_lo = b & _LO32
    b_hi = b >> _S32
    ll = a_lo * b_lo
    lh = a_lo * b_hi
    hl = a_hi * b_lo
    hh = a_hi * b_hi
    mid = (ll >> _S32) + (lh & _LO32) + (hl & _LO32)
    hi = hh + (lh >> _S32) + (hl >> _S32) + (mid >> _S32)
    return hi, a * b


@numba.njit(cache=True)
def philox_block(counter, key0, key1):
    """Philox-4x64-10 of the 256-bit counter ``(counter, 0, 0, 0)``."""
    c0 = counter
    c1 = np.uint64(0)
    c2 = np.uint64(0)
    c3 = np.uint64(0)
    k0 = key0
    k1 = key1
    for r in range(10):
        if r > 0:
            k0 = k0 + _W0
            k1 = k1 + _W1
        hi0, lo0 = _mulhilo(_M0, c0)
        hi1, lo1 = _mulhilo(_M1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


@numba.njit(cache=True)
def stream_uint64(seed, stream_id, k):
    """``k``-th raw 64-bit word of stream ``(seed, stream_id)``."""
    block = np.uint64(k // 4) + _ONE
    w = philox_block(block, np.uint64(seed), np.uint64(stream_id))
    j = k % 4
    if j == 0:
        return w[0]
    if j == 1:
        return w[1]
    if j == 2:
        return w[2]
    return w[3]


@numba.njit(cache=True)
def stream_uniform(seed, stream_id, k):
    """``k``-th double in [0, 1); equals ``rng_stream(seed, stream_id).random()`` draw ``k``."""
    return float(stream_uint64(seed, stream_id, k) >> _S11) * _TWO_M53


@numba.njit(cache=True)
def stream_normal_pair(seed, stream_id, k):
    """Two standard normals from draws ``k`` and ``k + 1`` (Box-Muller)."""
    u1 = 1.0 - stream_uniform(seed, stream_id, k)
    u2 = stream_uniform(seed, stream_id, k + 1)
    r = math.sqrt(-2.0 * math.log(u1))
    return r * math.cos(2.0 * math.pi * u2), r * math.sin(2.0 * math.pi * u2)
