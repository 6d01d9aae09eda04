"""Independent reference values frozen into the C++ unit tests.

Run with: python3 tests/oracles/compute_oracles.py
Uses mpmath/scipy only; shares no code with the C++ implementation.
"""
import math

import mpmath as mp
from scipy import integrate
from scipy.stats import norm

mp.mp.dps = 30


def shifted_legendre_1(x):
    return math.sqrt(3.0) * (2.0 * x - 1.0)


def bs_call(s0, k, r, sigma, t):
    d1 = (math.log(s0 / k) + (r + 0.5 * sigma**2) * t) / (sigma * math.sqrt(t))
    d2 = d1 - sigma * math.sqrt(t)
    return s0 * norm.cdf(d1) - k * math.exp(-r * t) * norm.cdf(d2)


def main():
    print("legendre1(1) =", repr(shifted_legendre_1(1.0)))
    print("int legendre1^2 =", integrate.quad(lambda x: shifted_legendre_1(x) ** 2, 0, 1)[0])
    print("1-cos1 =", mp.nstr(1 - mp.cos(1), 20))
    print("2sin1-sin2 =", mp.nstr(2 * mp.sin(1) - mp.sin(2), 20))
    print("2d quad sin(x+y) =", integrate.dblquad(lambda y, x: math.sin(x + y), 0, 1, 0, 1)[0])
    for d in (1, 2, 3, 6, 10, 30):
        closed = mp.im(((mp.e ** (1j) - 1) / (1j)) ** d)
        print(f"sin-sum integral d={d} =", mp.nstr(closed, 20))
    print("d=10 alternating binomial sum =",
          mp.nstr(sum((-1) ** (j + 1) * mp.binomial(10, j) * mp.sin(j) for j in range(11)), 20))
    print("exp(0.06) =", mp.nstr(mp.e ** mp.mpf("0.06"), 20))
    print("1-exp(-0.1) =", mp.nstr(1 - mp.e ** mp.mpf("-0.1"), 20))

    # Default Heston parameters; CIR mean/variance closed forms
    kappa, theta, sigma, v0, r, T = 0.5, 0.01, 0.15, 0.04, 0.01, 1.0 / 12.0
    ev = theta + (v0 - theta) * math.exp(-kappa * T)
    ex = r * T - 0.5 * (theta * T + (v0 - theta) * (1 - math.exp(-kappa * T)) / kappa)
    varv = (v0 * sigma**2 / kappa * (math.exp(-kappa * T) - math.exp(-2 * kappa * T))
            + theta * sigma**2 / (2 * kappa) * (1 - math.exp(-kappa * T)) ** 2)
    print("heston E[V_T] =", repr(ev))
    print("heston E[X_T] =", repr(ex))
    print("heston E[V_T^2] =", repr(varv + ev**2))

    print("bs call s0=1 K=1 r=.01 sig=.2 T=1 =", repr(bs_call(1, 1, 0.01, 0.2, 1.0)))
    print("bs call s0=1 K=0.9 r=.01 sig=.3 T=0.5 =", repr(bs_call(1, 0.9, 0.01, 0.3, 0.5)))
    print("bs call s0=1 K=e^-0.1 r=.01 sig=.2 T=1/12 =",
          repr(bs_call(1, math.exp(-0.1), 0.01, 0.2, 1 / 12)))
    # KS two-sample critical value, alpha = 0.01
    print("KS c(0.01) =", math.sqrt(-0.5 * math.log(0.01 / 2)))


if __name__ == "__main__":
    main()
