#!/usr/bin/env python3
"""The three operator families on the 5-dimensional contact chart.

Every family member carries fully abstract coefficient functions, so the
vanishing torsions below are exact polynomial identities in the opaque
partial derivatives, not spot checks.
"""

import haantjes.symexpr as sx
from haantjes import (
    HaantjesBasis,
    ZeroTester,
    appendix_family,
    check_haantjes_algebra,
    fn_symbol,
    haantjes_torsion,
    nijenhuis_torsion,
)
from haantjes.geometry import op_commutator

zt = ZeroTester(seed=2)
chart = sx.darboux_contact(2)
print("chart:", chart)

D1, B1, G1 = (fn_symbol(chart, n) for n in ("D1", "B1", "G1"))
D2, B2, G2 = (fn_symbol(chart, n) for n in ("D2", "B2", "G2"))

for fam in ("F1", "F2"):
    A = appendix_family(chart, fam, {"D": D1, "B": B1, "Kzz": G1})
    Bop = appendix_family(chart, fam, {"D": D2, "B": B2, "Kzz": G2})
    print(f"\n{fam} with abstract (D, B, K^z_z):")
    print("  Nijenhuis torsion vanishes:", nijenhuis_torsion(A).is_zero())
    print("  Haantjes torsion vanishes: ", haantjes_torsion(A).is_zero())
    print("  two instances commute:     ", op_commutator(A, Bop).is_zero_op())
    alg = check_haantjes_algebra(HaantjesBasis([A, Bop], names=[fam + "a", fam + "b"]), zt)
    print("  full algebra check (module + ring + abelian):", alg.status)

print("\nF3 with abstract functions (last-row coupling D*qk1z):")
shared = {"D": D1, "qK2z": fn_symbol(chart, "W"), "pK1z": fn_symbol(chart, "V")}
ka = fn_symbol(chart, "ka", deps=[0, 1, 2, 4])   # independent of p2, as required
kb = fn_symbol(chart, "kb", deps=[0, 1, 2, 4])
F3a = appendix_family(chart, "F3", dict(shared, qk1z=ka))
F3b = appendix_family(chart, "F3", dict(shared, qk1z=kb))
print("  Haantjes torsion vanishes:", haantjes_torsion(F3a).is_zero())
comm = op_commutator(F3a, F3b)
print("  different last-row functions commute:", comm.is_zero_op())
nonzero = [(i, j, e) for i, row in enumerate(comm.matrix)
           for j, e in enumerate(row) if not e.is_zero_expr()]
for i, j, e in nonzero:
    print(f"    commutator[{i}][{j}] =", e)
F3c = appendix_family(chart, "F3", dict(shared, qk1z=ka))
print("  same last-row function commutes:", op_commutator(F3a, F3c).is_zero_op())
