"""Writes the three-respondent WADI fixture and prints reference scores.

Independent of the C++ scorer: pandas groupby arithmetic straight from the
scoring rules (8 - v reverse coding, per-item sample-SD z-scores, binary items
entering as coded - 0.5, role-blended dual-level dimensions).
"""
import sys

import numpy as np
import pandas as pd

catalog = pd.read_csv(sys.argv[1])
respondents = [("M1", "management"), ("W1", "worker"), ("W2", "worker")]

rows = []
for idx, item in catalog.iterrows():
    for r, (rid, role) in enumerate(respondents):
        if item.binary:
            v = (idx + r) % 2
        else:
            v = 1 + (3 * idx + 2 * r * r + r) % 7
        rows.append(("F1", rid, role, item.item_id, v))
resp = pd.DataFrame(rows, columns=["firm_id", "respondent_id", "role", "item_id", "value"])
resp.to_csv(sys.argv[2], index=False)

df = resp.merge(catalog, on="item_id")
coded = np.where(df.reverse == 1, np.where(df.binary == 1, 1 - df.value, 8 - df.value), df.value).astype(float)
df["coded"] = coded
g = df.groupby("item_id")["coded"]
df["mean"] = g.transform("mean")
df["sd"] = g.transform(lambda s: s.std(ddof=1))
df = df[df.sd > 1e-12].copy()
df["z"] = np.where(df.binary == 1, df.coded - 0.5, (df.coded - df["mean"]) / df.sd)

scores = []
for k in range(1, 6):
    d = df[df.dimension == k]
    dual = bool(catalog[catalog.dimension == k].dual_level.any())
    m = d[d.role == "management"].z.mean()
    w = d[d.role == "worker"].z.mean()
    scores.append(0.5 * m + 0.5 * w if dual else d.z.mean())
    if k == 2:
        gap = abs(m - w)
scores = np.array(scores)
print("scores", " ".join(repr(float(s)) for s in scores))
print("composite_equal", repr(float(scores.mean())))
print("authority_gap", repr(float(gap)))
print("balance", repr(float(scores.std(ddof=0))))
