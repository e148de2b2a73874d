#!/usr/bin/env python3
"""Regenerate the pinned Daubechies dilation masks used by the built-in catalog.

Spectral factorization of |m0|^2 = cos^{2M}(w/2) P(sin^2(w/2)) with the
minimum-phase root choice, in 60-digit arithmetic. Output is normalized so the
coefficients sum to 2 and is printed as Rust `f64` array literals.

    python3 tools/pin_daubechies.py > /tmp/daubechies.rs
"""
import mpmath as mp

mp.mp.dps = 60


def poly_mul(a, b):
    out = [mp.mpc(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def daubechies(m):
    # P(y) = sum_{k<m} C(m-1+k, k) y^k
    p = [mp.binomial(m - 1 + k, k) for k in range(m)]
    roots_y = mp.polyroots(list(reversed(p)), maxsteps=200, extraprec=200) if m > 1 else []
    h = [mp.mpc(1)]
    for _ in range(m):
        h = poly_mul(h, [mp.mpc(1), mp.mpc(1)])
    for y in roots_y:
        # y = (2 - z - 1/z)/4  <=>  z^2 - (2 - 4y) z + 1 = 0
        b = 2 - 4 * y
        disc = mp.sqrt(b * b - 4)
        z1, z2 = (b + disc) / 2, (b - disc) / 2
        z = z1 if abs(z1) > 1 else z2
        # factor (z - root) with |root| > 1 in the variable e^{-iw}
        h = poly_mul(h, [-z, mp.mpc(1)])
    h = [mp.re(c) for c in h]
    s = mp.fsum(h)
    h = [2 * c / s for c in h]
    # ordering convention: p_0 is the endpoint of larger magnitude
    if abs(h[0]) < abs(h[-1]):
        h = list(reversed(h))
    return h


def main():
    for m in range(1, 6):
        h = daubechies(m)
        print(f"const DAUBECHIES_{m}: [f64; {len(h)}] = [")
        for c in h:
            print(f"    {mp.nstr(c, 22, strip_zeros=False, min_fixed=-1, max_fixed=1)},")
        print("];")


if __name__ == "__main__":
    main()
