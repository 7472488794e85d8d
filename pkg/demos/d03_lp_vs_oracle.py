"""The LP filling agrees with brute force over small integer chains."""
from horofill.filling import min_fill_lp, min_fill_oracle
from horofill.spaces import build_grid, random_cycle

cx = build_grid(2, 3)
for seed in range(8):
    a = random_cycle(cx, 1, 6, seed)
    if a.is_zero():
        continue
    lp = min_fill_lp(cx, a)
    ora = min_fill_oracle(cx, a, coeff_bound=1)
    print(f"seed {seed}: cycle mass {sum(abs(v) for v in a.coefs.values())}, "
          f"lp {lp.mass} (gap {lp.duality_gap}), oracle {ora.mass}")
