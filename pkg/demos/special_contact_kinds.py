#!/usr/bin/env python3
"""First- and second-kind special operator classes on the contact 5-chart.

The structural shape (dtheta-symmetric x-block, momentum-coupled z-row,
empty z-column) pins theta(K X_f) = K^z_z (p df/dp - f) exactly; whether
K^z_z vanishes splits the class in two, with different bracket identities
for the chain potentials in each case.
"""

import haantjes.symexpr as sx
from haantjes import (
    HaantjesBasis,
    ZeroTester,
    classify_special_kind,
    fn_symbol,
    is_haantjes,
    reeb_eigen_check,
    special_structure_operator,
    standard_contact_form,
    techain_check,
    theta_Kf_condition,
    validate_contact,
)

zt = ZeroTester(seed=4)
chart = sx.darboux_contact(2)
cs = validate_contact(standard_contact_form(chart), zt)
q1, q2, p1 = chart.coord("q1"), chart.coord("q2"), chart.coord("p1")
zero = chart.zero()

print("=== first kind: nilpotent antisymmetric block, K^z_z = 0 ===")
Kb = special_structure_operator(chart, [[zero] * 2] * 2, b_upper=chart.one())
print("Haantjes:", is_haantjes(Kb, zt).status)
kind, _ = classify_special_kind(Kb, cs, zt)
print("classified:", kind)
f = fn_symbol(chart, "f")
print("theta(K X_f) = 0 for abstract f:", theta_Kf_condition(Kb, f, cs, zt).status)
rep = techain_check(q1 + q2, HaantjesBasis([Kb], names=["Kb"]), cs, "first", zt)
print("chain identities (R H_i = 0, involution):", rep.summary())
print("potentials:", [str(x) for x in rep.data["potentials"]])

print("\n=== second kind: eigenvalues {0, K^z_z}, K^z_z != 0 ===")
Kg = special_structure_operator(chart, [[chart.one(), zero], [zero, zero]], kzz=chart.one())
print("Haantjes:", is_haantjes(Kg, zt).status)
kind, _ = classify_special_kind(Kg, cs, zt)
print("classified:", kind)
ree = reeb_eigen_check(Kg, cs, zt)
print("K R = g R with g =", ree.data["factor"])
print("theta(K X_f) matches -f theta(KR) on momentum-degree-0 f:",
      theta_Kf_condition(Kg, q1, cs, zt).status)
print("   ...but fails on degree-1 f = p1:",
      theta_Kf_condition(Kg, p1, cs, zt).status)
rep = techain_check(q1 * q1 + q2, HaantjesBasis([Kg], names=["Kg"]), cs, "second", zt)
print("chain identities ({H_i,H} = -H R H_i):", rep.summary())
print("potentials:", [str(x) for x in rep.data["potentials"]])

print("\n=== the identity operator is neither kind ===")
from haantjes import Operator11
kind, ev = classify_special_kind(Operator11.identity(chart), cs, zt)
print("classified:", kind, "-", ev.notes)
