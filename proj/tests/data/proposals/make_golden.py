#!/usr/bin/env python3
"""Builds the similarity fixture and its expected spans with numpy."""
import json

import numpy as np


def runs(mask, fps):
    out, start = [], None
    for i, on in enumerate(list(mask) + [False]):
        if on and start is None:
            start = i
        elif not on and start is not None:
            out.append([start / fps, i / fps])
            start = None
    return out


def union(spans):
    merged = []
    for s, e in sorted(spans):
        if merged and s <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], e)
        else:
            merged.append([s, e])
    return merged


def clean(spans):
    return [[int(v) if float(v).is_integer() else v for v in span] for span in spans]


def main():
    rng = np.random.default_rng(4)
    k, length = 3, 24
    sim = rng.uniform(-0.2, 0.2, size=(k, length))
    sim[0, 3:7] += 0.6
    sim[1, 15:18] += 0.5
    sim[1, 4:6] += 0.45
    sim[2, 20:24] += 0.7
    sim = np.round(sim, 4)
    tau, coef, fps = 0.07, 0.1, 1.0

    padded = np.pad(sim, ((0, 0), (1, 1)), mode="edge")
    smooth = (padded[:, :-2] + padded[:, 1:-1] + padded[:, 2:]) / 3.0
    z = smooth / tau
    z = z - z.max(axis=1, keepdims=True)
    prob = np.exp(z) / np.exp(z).sum(axis=1, keepdims=True)
    per_row = [runs(prob[i] > coef * prob[i].max(), fps) for i in range(k)]

    fixture = {"similarity": sim.tolist(), "tau": tau, "coef": coef, "fps": fps}
    golden = {"per_row": [clean(r) for r in per_row],
              "spans": clean(union([s for r in per_row for s in r]))}
    with open("similarity.json", "w") as f:
        json.dump(fixture, f)
        f.write("\n")
    with open("similarity.golden.json", "w") as f:
        json.dump(golden, f)
        f.write("\n")
    with open("saliency.json", "w") as f:
        json.dump({"saliency": [0.1, 0.8, 0.9, 0.85, 0.2], "coef": 0.7, "fps": 1}, f)
        f.write("\n")


if __name__ == "__main__":
    main()
