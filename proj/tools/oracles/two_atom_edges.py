"""Grid-scan oracle for the critical points / edges of the two-atom model.

sigma = {16 (x25), 1 (x25)}, n = 50, N = 1000. Uniform grid scan of z0'(m) on
each pole interval, sign-change bracketing, bisection in 40-digit arithmetic.
"""
import mpmath as mp

mp.mp.dps = 40
N = mp.mpf(1000)
atoms = [(mp.mpf(16), 25), (mp.mpf(1), 25)]


def z0(m):
    return -1 / m + sum(w * s / (1 + s * m) for s, w in atoms) / N


def dz0(m):
    return 1 / m**2 - sum(w * s**2 / (1 + s * m) ** 2 for s, w in atoms) / N


def scan(a, b, k=200000):
    roots = []
    xs = [a + (b - a) * (i + mp.mpf(1) / 2) / k for i in range(k)]
    prev = dz0(xs[0])
    for i in range(1, k):
        cur = dz0(xs[i])
        if prev * cur < 0:
            roots.append(mp.findroot(dz0, (xs[i - 1], xs[i]), solver="bisect"))
        prev = cur
    return roots


crit = []
crit += scan(-1 / mp.mpf(16), mp.mpf(0))
crit += sorted(scan(-1 / mp.mpf(1), -1 / mp.mpf(16)), reverse=True)
# unbounded interval via t = 1/m on (-sigma_min, inf): here n_bar < N so root has t<0
f = lambda t: -1 + sum(w * s**2 / (t + s) ** 2 for s, w in atoms) / N
t = mp.findroot(f, (-mp.mpf(1) + mp.mpf("1e-30"), mp.mpf(10)), solver="bisect")
crit.append(1 / t)
for m in crit:
    print(mp.nstr(m, 20), mp.nstr(z0(m), 20))
