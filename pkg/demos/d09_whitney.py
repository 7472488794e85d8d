"""Whitney decomposition of a box relative to its boundary."""
from collections import Counter

from horofill.extension import audit_whitney, whitney

for L, k in ((8, 1), (16, 2)):
    W = whitney(L, k)
    sides = Counter(c["side"] for c in W["cubes"])
    print(f"[0,{L}]^{k + 1}: {len(W['cubes'])} cubes, sides {dict(sorted(sides.items()))}")
    print("  audit:", {k2: v for k2, v in audit_whitney(W).items() if k2 != "count"})
