#!/usr/bin/env python3
"""Direct numpy transcription of the GRU cell, used to freeze test values.

Parameters follow a closed-form pattern so the C++ test can rebuild them:
  w_r[k] = 0.5 sin(1.3k + 0.2), w_h[k] = 0.6 cos(0.7k + 0.1), w_z[k] = 0.4 sin(0.9k - 0.5)
  b_r[i] = 0.1 (i + 1), b_h[i] = -0.05 (i + 1), b_z[i] = 0.2 - 0.1 i
  w_out[i] = 0.3 (i + 1) - 0.5, b_out = 0.05
with k the row-major index into the hidden x (input + hidden) matrix.
"""
import numpy as np

I, H = 2, 3
k = np.arange(H * (I + H))
w_r = (0.5 * np.sin(1.3 * k + 0.2)).reshape(H, I + H)
w_h = (0.6 * np.cos(0.7 * k + 0.1)).reshape(H, I + H)
w_z = (0.4 * np.sin(0.9 * k - 0.5)).reshape(H, I + H)
i = np.arange(H)
b_r = 0.1 * (i + 1)
b_h = -0.05 * (i + 1)
b_z = 0.2 - 0.1 * i
w_out = 0.3 * (i + 1) - 0.5
b_out = 0.05


def sig(a):
    return 1.0 / (1.0 + np.exp(-a))


def cell(x, s, literal):
    xs = np.concatenate([x, s])
    r = sig(w_r @ xs + b_r)
    z = sig(w_z @ xs + b_z)
    cand = np.concatenate([x, s if literal else r * s])
    h = np.tanh(w_h @ cand + b_h)
    return (1 - z) * h + z * s


x = np.array([0.7, -1.2])
s_prev = np.array([0.1, -0.3, 0.5])
seq = np.array([[0.7, -1.2], [-0.4, 0.9], [1.5, 0.3], [0.0, -0.8]])

for literal in (False, True):
    name = "paper-literal" if literal else "standard"
    s = cell(x, s_prev, literal)
    print(name, "cell", " ".join(f"{v:.17g}" for v in s))
    st = np.zeros(H)
    for row in seq:
        st = cell(row, st, literal)
    print(name, "sequence", f"{sig(w_out @ st + b_out):.17g}")
