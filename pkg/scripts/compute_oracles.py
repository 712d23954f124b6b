"""Independent high-precision values frozen into the test suite.

Uses mpmath only (none of the package code), so the numbers check the package
rather than restate it.
"""
import mpmath as mp

mp.mp.dps = 30


def homogeneous(mbar, a):
    """Root of (5/3) t^{4/3} = (4 pi / a^2)(mbar - t^2) and the matching potential."""
    c = 4 * mp.pi / a**2
    t = mp.findroot(lambda t: mp.mpf(5) / 3 * t ** (mp.mpf(4) / 3) - c * (mbar - t * t), (0, mp.sqrt(mbar)),
                    solver="anderson")
    return t, c * (mbar - t * t)


def main():
    u, phi = homogeneous(mp.mpf(1), mp.mpf(1))
    print("ubar(mbar=1, a=1)      ", mp.nstr(u, 21))
    print("phibar(mbar=1, a=1)    ", mp.nstr(phi, 19))
    a = mp.mpf(1)
    quad = mp.quad(lambda r: 4 * mp.pi * r * mp.exp(-a * r), [0, 1 / (4 * a)])
    closed = 4 * mp.pi / a**2 * (1 - mp.mpf(5) / 4 * mp.exp(-mp.mpf(1) / 4))
    print("Y_1 over B_{1/4}       ", mp.nstr(closed, 16), " quadrature diff", mp.nstr(quad - closed, 3))
    lam = mp.mpf(10) / 9
    C = mp.mpf(9) / 4 * mp.pi**2 / (lam**2 * (mp.mpf(5) / 3 - lam))
    print("C_S                    ", mp.nstr(C, 16), " (6561/2000) pi^2 =", mp.nstr(mp.mpf(6561) / 2000 * mp.pi**2, 16))
    print("5/(12 pi), 5/(24 pi)   ", mp.nstr(5 / (12 * mp.pi), 12), mp.nstr(5 / (24 * mp.pi), 12))
    for a in ("0.2", "0.1", "0.05"):
        a = mp.mpf(a)
        t, _ = homogeneous(mp.mpf(1), a)
        print(f"a={mp.nstr(a, 3):5s} (1-u^2)/a^2 = {mp.nstr((1 - t * t) / a**2, 8)}  (1-u)/a^2 = {mp.nstr((1 - t) / a**2, 8)}")


if __name__ == "__main__":
    main()
