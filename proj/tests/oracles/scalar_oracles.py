"""Independent scalar evaluations used to freeze expected values in the C++ tests.

Run with: python3 tests/oracles/scalar_oracles.py
"""
import math


def srgb_to_lab(r, g, b):
    def lin(c):
        c = c / 255.0
        return c / 12.92 if c <= 0.04045 else ((c + 0.055) / 1.055) ** 2.4

    rl, gl, bl = lin(r), lin(g), lin(b)
    x = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl
    y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl
    z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl
    xn, yn, zn = 0.95047, 1.0, 1.08883

    def f(t):
        d = 6.0 / 29.0
        return t ** (1.0 / 3.0) if t > d ** 3 else t / (3 * d * d) + 4.0 / 29.0

    fx, fy, fz = f(x / xn), f(y / yn), f(z / zn)
    return 116 * fy - 16, 500 * (fx - fy), 200 * (fy - fz)


def s_e(d2, sigma):
    return math.exp(-d2 / (2 * sigma * sigma))


L1, L2, L3 = 0.15, 0.4, 0.45
SC, SG, SE = 4.8, 0.25, 0.17
L4, L5 = L1 / (L1 + L2), L2 / (L1 + L2)

print("lab(119,119,119) =", srgb_to_lab(119, 119, 119))
print("lab(200,30,60)   =", srgb_to_lab(200, 30, 60))
print("S_e((50,0,0),(50,3,4),4.8) =", repr(s_e(25.0, SC)))
print("C_s(dc2=10, dg2=0.05, ds=0.01) =",
      repr(L1 * s_e(10.0, SC) + L2 * s_e(0.05, SG) + L3 * math.exp(-0.01 / (2 * SE * SE))))
print("B(dc2=2sc^2, dg=0) =", repr(1 - L4 * math.exp(-1) - L5))

# Three-candidate cluster: confidences and descriptors (fc 3-d, fg reduced to 2 non-zero dims).
w = [0.9, 0.5, 0.2]
fcs = [(50.0, 10.0, -5.0), (52.0, 8.0, -4.0), (47.0, 11.0, -7.0)]
fgs = [(0.6, 0.2), (0.5, 0.3), (0.8, 0.1)]
bm = sum(w)
fc_hat = [sum(wi * f[k] for wi, f in zip(w, fcs)) / bm for k in range(3)]
fg_hat = [sum(wi * f[k] for wi, f in zip(w, fgs)) / bm for k in range(2)]
ref_fc = (49.0, 9.0, -5.0)
ref_fg = (0.55, 0.25)
dc2 = sum((a - b) ** 2 for a, b in zip(ref_fc, fc_hat))
dg2 = sum((a - b) ** 2 for a, b in zip(ref_fg, fg_hat))
print("fc_hat =", [repr(v) for v in fc_hat])
print("fg_hat =", [repr(v) for v in fg_hat])
print("M =", repr(L4 * s_e(dc2, SC) + L5 * s_e(dg2, SG)))
print("psnr(16) =", repr(20 * math.log10(255 / 16)))
