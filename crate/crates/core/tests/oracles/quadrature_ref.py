"""High-precision J and phi values (mpmath) used to freeze quadrature tests."""
from mpmath import mp, quad, exp, log, sqrt, pi, tanh, inf

mp.dps = 40


def j_fun(s):
    m = s * s / 2
    f = lambda y: exp(-(y - m) ** 2 / (2 * s * s)) / sqrt(2 * pi * s * s) * log(1 + exp(-y)) / log(2)
    return 1 - quad(f, [-inf, m - 10 * s, m, m + 10 * s, inf])


def phi_fun(s):
    f = lambda y: exp(-y * y / 2) / sqrt(2 * pi) * tanh(s * s / 4 - s * y / 2)
    return 1 - quad(f, [-inf, -10, 0, s / 2, 10, inf])


for s in [0.5, 1, 2, 3, 5]:
    print(s, mp.nstr(j_fun(s), 20), mp.nstr(phi_fun(s), 20))
