#!/usr/bin/env python3
"""Regenerate src/rs_coefficients.hpp.

Psi(p) = cos(2 pi (p^2 - p - 1/16)) / cos(2 pi p) is expanded about p = 1/2 by
exact power-series division (mpmath, 120 digits), and the corrections are

  C0 = Psi
  C1 = -Psi'''/(96 pi^2)
  C2 = Psi''/(64 pi^2) + Psi^(6)/(18432 pi^4)
  C3 = -Psi'/(64 pi^2) - Psi^(5)/(3840 pi^4) - Psi^(9)/(5308416 pi^6)

Series are cut once the dropped tail is below 1e-19 on |p - 1/2| <= 1/2.
"""
import sys

import mpmath as mp

mp.mp.dps = 120
N = 260
pi = mp.pi


def cos_series(c, k, n):
    """Coefficients of cos(c x^k) up to x^(n-1)."""
    out = [mp.mpf(0)] * n
    j = 0
    while 2 * j * k < n:
        out[2 * j * k] = (-1) ** j * c ** (2 * j) / mp.factorial(2 * j)
        j += 1
    return out


def sin_series(c, k, n):
    out = [mp.mpf(0)] * n
    j = 0
    while (2 * j + 1) * k < n:
        out[(2 * j + 1) * k] = (-1) ** j * c ** (2 * j + 1) / mp.factorial(2 * j + 1)
        j += 1
    return out


def deriv(c, m):
    return [c[i + m] * mp.factorial(i + m) / mp.factorial(i) for i in range(len(c) - m)]


def combine(*pairs):
    length = min(len(c) for _, c in pairs)
    return [sum(w * c[i] for w, c in pairs) for i in range(length)]


def truncate(c):
    n = len(c)
    while n > 1 and sum(abs(c[i]) * mp.mpf(0.5) ** i for i in range(n - 1, len(c))) < 1e-19:
        n -= 1
    return c[: n + 1]


def main():
    # With x = p - 1/2: p^2 - p - 1/16 = x^2 - 5/16 and cos(2 pi p) = -cos(2 pi x).
    a = cos_series(2 * pi, 2, N)
    b = sin_series(2 * pi, 2, N)
    num = [-(mp.cos(5 * pi / 8) * a[i] + mp.sin(5 * pi / 8) * b[i]) for i in range(N)]
    den = cos_series(2 * pi, 1, N)
    psi = [mp.mpf(0)] * N
    for i in range(N):
        psi[i] = (num[i] - sum(psi[j] * den[i - j] for j in range(i))) / den[0]

    series = {
        "C0": psi,
        "C1": combine((-1 / (96 * pi**2), deriv(psi, 3))),
        "C2": combine((1 / (64 * pi**2), deriv(psi, 2)), (1 / (18432 * pi**4), deriv(psi, 6))),
        "C3": combine(
            (-1 / (64 * pi**2), deriv(psi, 1)),
            (-1 / (3840 * pi**4), deriv(psi, 5)),
            (-1 / (5308416 * pi**6), deriv(psi, 9)),
        ),
    }
    out = sys.stdout
    out.write("#pragma once\n\n")
    out.write("// Taylor coefficients in x = p - 1/2 of the Riemann-Siegel correction\n")
    out.write("// functions C0..C3, generated by tools/rs_coefficients.py.\n\n")
    out.write("namespace mesozeta::detail {\n")
    for name, c in series.items():
        out.write(f"\ninline constexpr double kRs{name}[] = {{\n")
        for v in truncate(c):
            out.write(f"  {mp.nstr(v, 20, min_fixed=-1, max_fixed=-1)},\n")
        out.write("};\n")
    out.write("\n}  // namespace mesozeta::detail\n")


if __name__ == "__main__":
    main()
