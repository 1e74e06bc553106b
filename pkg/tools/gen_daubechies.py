"""Regenerate ``src/waveaug/_daubechies.py``.

Minimum-phase Daubechies low-pass filters via spectral factorization,
computed at 80 significant digits with mpmath and rounded to float64.

    python tools/gen_daubechies.py > src/waveaug/_daubechies.py
"""
import mpmath as mp

mp.mp.dps = 80


def daubechies(n):
    # P(y) = sum_k C(n-1+k, k) y^k with y = (2 - z - 1/z) / 4
    # Multiplying by z^(n-1) gives a polynomial in z of degree 2n-2.
    poly = [mp.mpf(0)] * (2 * n - 1)  # coefficient of z^j, j = 0..2n-2
    for k in range(n):
        c = mp.binomial(n - 1 + k, k) / mp.mpf(4) ** k
        # (2 - z - 1/z)^k * z^(n-1) = (-1)^k (z - 1)^(2k) z^(n-1-k)
        for j in range(2 * k + 1):
            term = c * (-1) ** k * mp.binomial(2 * k, j) * (-1) ** (2 * k - j)
            poly[j + n - 1 - k] += term
    if n == 1:
        roots = []
    else:
        roots = mp.polyroots(list(reversed(poly)), maxsteps=2000, extraprec=400)
    inside = [r for r in roots if abs(r) < 1]
    # h(z) ~ (1 + z)^n * prod (z - r)
    coeffs = [mp.mpc(1)]
    factors = [mp.mpc(-1)] * n + inside
    for r in factors:
        nxt = [mp.mpc(0)] * (len(coeffs) + 1)
        for i, c in enumerate(coeffs):
            nxt[i] += -r * c
            nxt[i + 1] += c
        coeffs = nxt
    coeffs = [mp.re(c) for c in coeffs]
    scale = mp.sqrt(2) / mp.fsum(coeffs)
    h = [c * scale for c in coeffs]
    # minimum phase ordering: largest energy first
    if abs(h[0]) < abs(h[-1]):
        h = list(reversed(h))
    return h


def main():
    print('"""Daubechies db1..db26 reconstruction low-pass filters (minimum phase).')
    print()
    print("Generated by tools/gen_daubechies.py; do not edit by hand.")
    print('"""')
    print()
    print("REC_LO = {")
    for n in range(1, 27):
        h = daubechies(n)
        print(f"    {n}: (")
        for c in h:
            print(f"        {float(c)!r},")
        print("    ),")
    print("}")


if __name__ == "__main__":
    main()
