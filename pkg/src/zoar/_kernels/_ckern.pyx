# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend.

Same bit-level contract as the pure backend (see pure.py): SplitMix64
counter streams, odd-numerator (0,1) doubles, Acklam inverse normal CDF
with an fdlibm-style pinned logarithm in the tails.  Every float
operation is written in the same order as the NumPy implementation and
the extension is compiled with -ffp-contract=off, so outputs are
bit-identical across the two backends.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport frexp, sqrt

cnp.import_array()

BACKEND_NAME = "compiled"

cdef unsigned long long GOLDEN = 0x9E3779B97F4A7C15ULL
cdef unsigned long long M1 = 0xBF58476D1CE4E5B9ULL
cdef unsigned long long M2 = 0x94D049BB133111EBULL

cdef double TWO_NEG53 = 1.0 / 9007199254740992.0
cdef double SQRT_HALF = 0.70710678118654752440

cdef double LN2_HI = 6.93147180369123816490e-01
cdef double LN2_LO = 1.90821492927058770002e-10
cdef double LG1 = 6.666666666666735130e-01
cdef double LG2 = 3.999999999940941908e-01
cdef double LG3 = 2.857142874366239149e-01
cdef double LG4 = 2.222219843214978396e-01
cdef double LG5 = 1.818357216161805012e-01
cdef double LG6 = 1.531383769920937332e-01
cdef double LG7 = 1.479819860511658591e-01

cdef double A0 = -3.969683028665376e+01
cdef double A1 = 2.209460984245205e+02
cdef double A2 = -2.759285104469687e+02
cdef double A3 = 1.383577518672690e+02
cdef double A4 = -3.066479806614716e+01
cdef double A5 = 2.506628277459239e+00
cdef double B0 = -5.447609879822406e+01
cdef double B1 = 1.615858368580409e+02
cdef double B2 = -1.556989798598866e+02
cdef double B3 = 6.680131188771972e+01
cdef double B4 = -1.328068155288572e+01
cdef double C0 = -7.784894002430293e-03
cdef double C1 = -3.223964580411365e-01
cdef double C2 = -2.400758277161838e+00
cdef double C3 = -2.549732539343734e+00
cdef double C4 = 4.374664141464968e+00
cdef double C5 = 2.938163982698783e+00
cdef double D0 = 7.784695709041462e-03
cdef double D1 = 3.224671290700398e-01
cdef double D2 = 2.445134137142996e+00
cdef double D3 = 3.754408661907416e+00
cdef double P_LOW = 0.02425
cdef double P_HIGH = 1.0 - 0.02425

DEF TAG_GAUSSIAN = 0
DEF TAG_SPHERE = 1
DEF TAG_COORDINATE = 2


cdef inline unsigned long long _mix64(unsigned long long z) nogil:
    z = (z ^ (z >> 30)) * M1
    z = (z ^ (z >> 27)) * M2
    return z ^ (z >> 31)


cdef inline double _open01(unsigned long long x) nogil:
    return (<double> ((x >> 12) * 2ULL + 1ULL)) * TWO_NEG53


cdef double _log_unit(double x) nogil:
    cdef int e
    cdef double m, f, s, z, w, t1, t2, r, hfsq, k
    m = frexp(x, &e)
    if m < SQRT_HALF:
        m = m * 2.0
        e = e - 1
    f = m - 1.0
    s = f / (2.0 + f)
    z = s * s
    w = z * z
    t1 = w * (LG2 + w * (LG4 + w * LG6))
    t2 = z * (LG1 + w * (LG3 + w * (LG5 + w * LG7)))
    r = t1 + t2
    hfsq = 0.5 * f * f
    k = <double> e
    return k * LN2_HI - ((hfsq - (s * (hfsq + r) + k * LN2_LO)) - f)


cdef double _ndtri(double p) nogil:
    cdef double q, r, num, den
    if p < P_LOW:
        q = sqrt(-2.0 * _log_unit(p))
        num = ((((C0 * q + C1) * q + C2) * q + C3) * q + C4) * q + C5
        den = (((D0 * q + D1) * q + D2) * q + D3) * q + 1.0
        return num / den
    elif p <= P_HIGH:
        q = p - 0.5
        r = q * q
        num = (((((A0 * r + A1) * r + A2) * r + A3) * r + A4) * r + A5) * q
        den = ((((B0 * r + B1) * r + B2) * r + B3) * r + B4) * r + 1.0
        return num / den
    else:
        q = sqrt(-2.0 * _log_unit(1.0 - p))
        num = ((((C0 * q + C1) * q + C2) * q + C3) * q + C4) * q + C5
        den = (((D0 * q + D1) * q + D2) * q + D3) * q + 1.0
        return -(num / den)


cdef void _fill_normals(unsigned long long seed, double* out, Py_ssize_t n) nogil:
    cdef Py_ssize_t j
    cdef unsigned long long x
    for j in range(n):
        x = _mix64(seed + (<unsigned long long> (j + 1)) * GOLDEN)
        out[j] = _ndtri(_open01(x))


cdef void _fill_direction(unsigned long long seed, int tag, double* out,
                          Py_ssize_t dim) nogil:
    cdef Py_ssize_t i
    cdef double acc, nrm
    cdef unsigned long long x
    if tag == TAG_COORDINATE:
        for i in range(dim):
            out[i] = 0.0
        x = _mix64(seed + GOLDEN)
        out[<Py_ssize_t> (x % (<unsigned long long> dim))] = 1.0
        return
    _fill_normals(seed, out, dim)
    if tag == TAG_SPHERE:
        acc = 0.0
        for i in range(dim):
            acc += out[i] * out[i]
        nrm = sqrt(acc)
        for i in range(dim):
            out[i] = out[i] / nrm


def log_unit(p):
    """Pinned log on an array of values in (0, 1); parity-test surface."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] arr = np.ascontiguousarray(p, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(arr.shape[0])
    cdef Py_ssize_t i
    for i in range(arr.shape[0]):
        out[i] = _log_unit(arr[i])
    return out


def normal_icdf(p):
    """Inverse standard normal CDF for p strictly inside (0, 1)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] arr = np.ascontiguousarray(p, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(arr.shape[0])
    cdef Py_ssize_t i
    for i in range(arr.shape[0]):
        out[i] = _ndtri(arr[i])
    return out


def standard_normals(seed, Py_ssize_t n):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n)
    _fill_normals(<unsigned long long> seed, &out[0] if n > 0 else NULL, n)
    return out


def uniform_doubles(seed, Py_ssize_t n):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n)
    cdef unsigned long long s = <unsigned long long> seed
    cdef unsigned long long x
    cdef Py_ssize_t j
    for j in range(n):
        x = _mix64(s + (<unsigned long long> (j + 1)) * GOLDEN)
        out[j] = (<double> (x >> 11)) * TWO_NEG53
    return out


def materialize(seed, int tag, Py_ssize_t dim):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(dim)
    _fill_direction(<unsigned long long> seed, tag, &out[0], dim)
    return out


def materialize_block(seeds, int tag, Py_ssize_t dim):
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] s = np.ascontiguousarray(seeds, dtype=np.uint64)
    cdef Py_ssize_t m = s.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((m, dim))
    cdef Py_ssize_t r
    with nogil:
        for r in range(m):
            _fill_direction(s[r], tag, &out[r, 0], dim)
    return out


def weighted_direction_sum(seeds, int tag, Py_ssize_t dim, coeffs):
    """sum_j coeffs[j] * direction(seeds[j]), accumulated in j order."""
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] s = np.ascontiguousarray(seeds, dtype=np.uint64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] c = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef Py_ssize_t m = s.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(dim)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] buf = np.empty(dim)
    cdef Py_ssize_t r, i
    cdef double cr
    with nogil:
        for r in range(m):
            _fill_direction(s[r], tag, &buf[0], dim)
            cr = c[r]
            for i in range(dim):
                out[i] += cr * buf[i]
    return out
