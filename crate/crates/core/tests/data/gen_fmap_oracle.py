# Regenerates fmap_oracle.json with the numpy reference map in fmap_ref.py.
import json, numpy as np
from fmap_ref import Prob

rng = np.random.default_rng(20240611)
cases = []
for (n, k, p, q, m) in [(4, 2, 10, 9, 4), (5, 3, 3, 1, 3), (3, 1, 2, 1, 5)]:
    P = Prob(n, k, p, q, m, 1.05)
    d = 2 * m * (n + 5) - 3
    x = (rng.standard_normal(d) + 1j * rng.standard_normal(d)) * 0.4
    ut = [(rng.standard_normal(2 * m - 3) + 1j * rng.standard_normal(2 * m - 3)) * 0.4 for _ in range(3)]
    y = P.F(x, [np.concatenate([[0], c, [0]]) for c in ut])
    cases.append(dict(n=n, k=k, p=p, q=q, m=m,
                      x=[[z.real, z.imag] for z in x],
                      utilde=[[[z.real, z.imag] for z in c] for c in ut],
                      y=[[z.real, z.imag] for z in y]))
json.dump(cases, open("fmap_oracle.json", "w"))
