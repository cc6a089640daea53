"""Decay rate of sup|f * phi_eps - f| for a Gevrey bump, computed on a finer grid.

The bump equals 1 on |x| <= 0.25 and vanishes beyond 0.5 (sigma = 2).  The
mollifier transform is the Gevrey step in |xi| between 0.15 and 0.35 of the
Nyquist frequency of a 4096-point grid of half-width 64.  The rate k is the
least-squares slope of -log(sup) against eps^(-1/3) over the three smallest
eps whose error exceeds the transform roundoff level.
"""
import json
import sys

import numpy as np

SIGMA = 2.0
S = 1.0 / (2.0 * SIGMA - 1.0)
N = 8192
LO, HI = -1.0, 1.0


def h(t):
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-t[pos] ** (-1.0 / (SIGMA - 1.0)))
    return out


def step(t):
    t = np.clip(t, 0.0, 1.0)
    a, b = h(1.0 - t), h(t)
    return a / (a + b)


def main():
    dx = (HI - LO) / N
    x = LO + dx * np.arange(N)
    f = step((np.abs(x) - 0.25) / 0.25)

    m_dx = 128.0 / 4096
    m_xi_max = np.pi / m_dx
    xi_in, xi_out = 0.15 * m_xi_max, 0.35 * m_xi_max

    buf = np.zeros(2 * N, dtype=complex)
    buf[:N] = f
    spec = np.fft.fft(buf)
    xi = 2.0 * np.pi * np.fft.fftfreq(2 * N, d=dx)

    eps = np.geomspace(1e-1, 1e-4, 10)
    floor = 1e-14 * np.abs(f).max()
    sups = []
    for e in eps:
        mult = step((np.abs(e * xi) - xi_in) / (xi_out - xi_in)) - 1.0
        err = np.fft.ifft(spec * mult)[:N]
        sup = np.abs(err).max()
        sups.append(sup if sup > floor else 0.0)

    pts = [(e, v) for e, v in zip(eps, sups) if v > 0.0][-3:]
    feat = np.array([e ** -S for e, _ in pts])
    logv = np.log([v for _, v in pts])
    k = -np.polyfit(feat, logv, 1)[0]
    out = {
        "n": N,
        "eps": list(eps),
        "sup_error": sups,
        "k": k,
        "threshold": float(np.floor(0.8 * k * 100) / 100),
    }
    json.dump(out, sys.stdout, indent=2)
    print()


if __name__ == "__main__":
    main()
