"""Regenerate ishigami_mc.json: a plain Monte Carlo variance decomposition.

Independent of salix: numpy pseudo-random draws (no Sobol sequence), the
Ishigami function written out inline, and pick-freeze estimators on
10**6 base rows.  Run from the repository root:

    python3 tests/fixtures/make_ishigami_mc.py
"""

import json
import os

import numpy as np

A, B = 7.0, 0.1
N = 10 ** 6
SEED = 20240601


def ishigami(X):
    return np.sin(X[:, 0]) + A * np.sin(X[:, 1]) ** 2 + B * X[:, 2] ** 4 * np.sin(X[:, 0])


def main():
    rng = np.random.default_rng(SEED)
    XA = rng.uniform(-np.pi, np.pi, (N, 3))
    XB = rng.uniform(-np.pi, np.pi, (N, 3))
    fA, fB = ishigami(XA), ishigami(XB)
    var = np.var(np.concatenate([fA, fB]))
    s1, st = [], []
    for i in range(3):
        XAB = XA.copy()
        XAB[:, i] = XB[:, i]
        fAB = ishigami(XAB)
        s1.append(float(np.mean(fB * (fAB - fA)) / var))
        st.append(float(0.5 * np.mean((fA - fAB) ** 2) / var))
    out = {"a": A, "b": B, "n": N, "seed": SEED, "sampler": "numpy default_rng uniform",
           "variance": float(var), "s1": s1, "st": st}
    path = os.path.join(os.path.dirname(os.path.abspath(__file__)), "ishigami_mc.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(out, fh, indent=2)
        fh.write("\n")
    print(json.dumps(out))


if __name__ == "__main__":
    main()
