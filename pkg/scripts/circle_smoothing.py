"""Smooth the cone over a pentagon of quarter circles and watch the curvature.

Prints the warp factor and curvature across the transition band for a few
depths, then the worst |K+1| per depth, which halves as the depth doubles.
"""
import numpy as np

from conesmith import smoothing as S

SEGMENTS = 5

for d2 in (8.0, 16.0, 32.0):
    r = 3 * d2
    k = SEGMENTS / 4
    t = np.linspace(r - d2 - 2, r + 2, 9)
    mu = S.circle_profile(t, k, r, d2)
    K = S.circle_curvature(t, k, r, d2)
    print(f"d2={d2:g}  r={r:g}")
    for ti, mi, Ki in zip(t, mu, K):
        print(f"  t={ti:7.3f}  mu={mi:.6f}  K={Ki:+.6f}")
    band = np.linspace(r - d2, r, 20001)
    print(f"  max |K+1| on the band: {np.abs(S.circle_curvature(band, k, r, d2) + 1).max():.5f}\n")
