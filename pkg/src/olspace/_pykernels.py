"""Pure-Python hot loops. Same API and arithmetic order as the Cython build."""
import math

POWER, POWERLOG, EXPM1 = 0, 1, 2


def rearrange(values, measures):
    order = sorted(range(len(values)), key=lambda i: -values[i])
    vals, bps = [], [0.0]
    for i in order:
        v, m = float(values[i]), float(measures[i])
        if m <= 0.0:
            continue
        if vals and vals[-1] == v:
            bps[-1] += m
        else:
            vals.append(v)
            bps.append(bps[-1] + m)
    return vals, bps


def distribution(values, measures, lam):
    total = 0.0
    for v, m in zip(values, measures):
        if v > lam:
            total += m
    return total


def modular_sum(phivals, wbreaks):
    total = 0.0
    for j in range(len(phivals)):
        dw = wbreaks[j + 1] - wbreaks[j]
        if dw > 0.0 and phivals[j] > 0.0:
            total += phivals[j] * dw
    return total


def _phi(code, p, q, x):
    if x <= 0.0:
        return 0.0
    try:
        if code == POWER:
            return math.pow(x, p)
        if code == POWERLOG:
            base = math.pow(x, p)
            return base * math.pow(math.log1p(x), q) if q != 0.0 else base
        return math.expm1(x)
    except OverflowError:
        return math.inf


def scaled_modular(code, p, q, values, dw, eps):
    total = 0.0
    for v, d in zip(values, dw):
        if d > 0.0:
            total += _phi(code, p, q, v / eps) * d
    return total


def norm_bracket(code, p, q, values, dw, eps0):
    """Return (lo, hi, iters) with modular(lo) > 1 >= modular(hi)."""
    eps, it = eps0, 0
    if scaled_modular(code, p, q, values, dw, eps) > 1.0:
        while scaled_modular(code, p, q, values, dw, eps) > 1.0:
            eps *= 2.0
            it += 1
        return eps / 2.0, eps, it
    while scaled_modular(code, p, q, values, dw, eps) <= 1.0:
        eps /= 2.0
        it += 1
    return eps, eps * 2.0, it


def norm_bisect(code, p, q, values, dw, lo, hi, rtol, maxiter):
    it = 0
    while hi - lo > rtol * hi and it < maxiter:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if scaled_modular(code, p, q, values, dw, mid) <= 1.0:
            hi = mid
        else:
            lo = mid
        it += 1
    return lo, hi, it
