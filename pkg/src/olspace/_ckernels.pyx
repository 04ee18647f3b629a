# cython: cdivision=True
"""Compiled hot loops; mirrors _pykernels exactly."""
from libc.math cimport pow, log1p, expm1, INFINITY

cdef enum:
    POWER = 0
    POWERLOG = 1


def rearrange(values, measures):
    cdef Py_ssize_t n = len(values), i
    order = sorted(range(n), key=lambda k: -values[k])
    vals, bps = [], [0.0]
    cdef double v, m, last = 0.0, acc = 0.0
    for i in order:
        v = values[i]
        m = measures[i]
        if m <= 0.0:
            continue
        acc += m
        if vals and last == v:
            bps[len(bps) - 1] = acc
        else:
            vals.append(v)
            bps.append(acc)
            last = v
    return vals, bps


def distribution(double[:] values, double[:] measures, double lam):
    cdef double total = 0.0
    cdef Py_ssize_t i
    for i in range(values.shape[0]):
        if values[i] > lam:
            total += measures[i]
    return total


def modular_sum(double[:] phivals, double[:] wbreaks):
    cdef double total = 0.0, dw
    cdef Py_ssize_t j
    for j in range(phivals.shape[0]):
        dw = wbreaks[j + 1] - wbreaks[j]
        if dw > 0.0 and phivals[j] > 0.0:
            total += phivals[j] * dw
    return total


cdef inline double _phi(int code, double p, double q, double x) nogil:
    cdef double base
    if x <= 0.0:
        return 0.0
    if code == POWER:
        return pow(x, p)
    if code == POWERLOG:
        base = pow(x, p)
        if q != 0.0:
            return base * pow(log1p(x), q)
        return base
    return expm1(x)


cdef double _scaled(int code, double p, double q, double[:] values, double[:] dw, double eps) nogil:
    cdef double total = 0.0
    cdef Py_ssize_t i
    for i in range(values.shape[0]):
        if dw[i] > 0.0:
            total += _phi(code, p, q, values[i] / eps) * dw[i]
    return total


def scaled_modular(int code, double p, double q, double[:] values, double[:] dw, double eps):
    return _scaled(code, p, q, values, dw, eps)


def norm_bracket(int code, double p, double q, double[:] values, double[:] dw, double eps0):
    cdef double eps = eps0
    cdef long it = 0
    if _scaled(code, p, q, values, dw, eps) > 1.0:
        while _scaled(code, p, q, values, dw, eps) > 1.0:
            eps *= 2.0
            it += 1
        return eps / 2.0, eps, it
    while _scaled(code, p, q, values, dw, eps) <= 1.0:
        eps /= 2.0
        it += 1
    return eps, eps * 2.0, it


def norm_bisect(int code, double p, double q, double[:] values, double[:] dw,
                double lo, double hi, double rtol, long maxiter):
    cdef long it = 0
    cdef double mid
    while hi - lo > rtol * hi and it < maxiter:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _scaled(code, p, q, values, dw, mid) <= 1.0:
            hi = mid
        else:
            lo = mid
        it += 1
    return lo, hi, it
