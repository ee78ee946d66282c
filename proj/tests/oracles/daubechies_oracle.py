"""Independent oracle for the Daubechies lowpass filters.

Solves the defining nonlinear system directly (sum rule, double-shift
orthonormality, highpass vanishing moments) with Newton iterations in
50-digit arithmetic. The library builds its filters by spectral
factorization instead, so agreement between the two is a real check.

Usage: python3 daubechies_oracle.py
"""
import mpmath as mp

mp.mp.dps = 50

# Rough starting points (two significant digits) for the minimum-phase branch.
GUESSES = {
    2: [0.48, 0.84, 0.22, -0.13],
    3: [0.33, 0.81, 0.46, -0.14, -0.085, 0.035],
    4: [0.23, 0.71, 0.63, -0.028, -0.19, 0.031, 0.033, -0.011],
}


def system(n):
    length = 2 * n

    def f(*h):
        eqs = [mp.fsum(h) - mp.sqrt(2)]
        for m in range(n):
            eqs.append(mp.fsum(h[k] * h[k + 2 * m] for k in range(length - 2 * m)) - (1 if m == 0 else 0))
        # g_k = (-1)^k h_{L-1-k}; moments of g for p = 1..n-1
        for p in range(1, n):
            eqs.append(mp.fsum(((-1) ** k) * h[length - 1 - k] * mp.mpf(k) ** p for k in range(length)))
        return eqs

    return f


def main():
    for n, guess in GUESSES.items():
        sol = mp.findroot(system(n), guess, tol=mp.mpf(10) ** -40, maxsteps=200)
        print(f"N={n}")
        for v in sol:
            print(f"  {mp.nstr(v, 20)}")


if __name__ == "__main__":
    main()
