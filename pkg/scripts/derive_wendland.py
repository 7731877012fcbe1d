"""Derive the Wendland coefficient tables hard-coded in coherent_rbf.kernels.

psi_{d,k} = I^k (1 - r)^l with l = floor(d/2) + k + 1 and
I f(r) = int_r^1 t f(t) dt, normalised to psi(0) = 1.  Each function and its
first two derivatives is written as (1 - r)^p q(r); the ascending
coefficients of q are printed as exact rationals.

Usage: python3 scripts/derive_wendland.py   (needs sympy, dev-only)
"""
import sympy as sp

r, t = sp.symbols("r t")
PAIRS = [(3, 1), (4, 2), (5, 3), (6, 4)]


def wendland(d, k):
    f = (1 - r) ** (d // 2 + k + 1)
    for _ in range(k):
        f = sp.integrate((t * f.subs(r, t)), (t, r, 1))
    f = sp.expand(f)
    return sp.expand(f / f.subs(r, 0))


def factored(expr, power):
    q, rem = sp.div(sp.Poly(expr, r), sp.Poly((1 - r) ** power, r))
    assert rem.is_zero, "not divisible"
    return [q.as_expr().coeff(r, i) for i in range(q.degree() + 1)]


def table(d, k):
    psi = wendland(d, k)
    # the power of (1 - r) is the multiplicity of the root r = 1
    m = sp.roots(sp.Poly(psi, r))[1]
    return m, factored(psi, m), factored(sp.diff(psi, r), m - 1), factored(sp.diff(psi, r, 2), m - 2)


def main():
    for d, k in PAIRS:
        m, q, q1, q2 = table(d, k)
        print(f"psi{d}{k}: power {m}")
        print(f"  poly   {q}")
        print(f"  dpoly  {q1}")
        print(f"  ddpoly {q2}")


if __name__ == "__main__":
    main()
