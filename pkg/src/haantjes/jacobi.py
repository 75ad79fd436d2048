"""Jacobi structures: brackets, Hamiltonian fields, compatibility,
particular integrals, Poissonization.

Sign conventions, fixed once and calibrated by the test suite:

* the Jacobi bracket is {f,g} = L(df,dg) + f Eg - g Ef with {q,p} = +1 on
  the Darboux contact chart;
* the Hamiltonian field is forced by {g,f} = X_f g + g Ef, which pins the
  musical map to  (sharp a)^i = sum_j L^ij a_j  (argument in the second
  slot).  On a contact chart this reproduces the contact Hamiltonian field
  exactly.  The extended (Lambda, E)-sharp used by the EJH theory contracts
  the FIRST slot instead; see `extended`.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .checks import CheckReport
from .geometry import (
    KForm,
    KVector,
    Operator11,
    VectorField,
    d_scalar,
    schouten_bracket,
    wedge_v,
)
from .symexpr import (
    Chart,
    Expr,
    ZeroTester,
    eval_numeric,
    exp as exp_,
)
from .torsion import HaantjesBasis, verify_chain

__all__ = [
    "JacobiStructure",
    "ParticularIntegralWitness",
    "check_jh_compatibility",
    "hamiltonian_vf",
    "jacobi_bracket",
    "lambda_sharp",
    "particular_integral_check",
    "poissonize",
    "poissonize_lift_check",
    "proposition_involutivity_check",
    "validate_jacobi",
]


@dataclass
class JacobiStructure:
    chart: Chart
    lam: KVector            # bivector
    e_field: VectorField
    validity: Optional[CheckReport] = None

    @property
    def validated(self) -> bool:
        return self.validity is not None and self.validity.passed

    def full_matrix(self):
        return self.lam.full_matrix()


def validate_jacobi(lam: KVector, e_field: VectorField, zt: ZeroTester = ZeroTester()) -> JacobiStructure:
    """Certify [L,L] = 2 E ^ L and [L,E] = 0."""
    if lam.degree != 2:
        raise ValueError("lambda must be a bivector")
    if lam.chart != e_field.chart:
        raise ValueError("lambda and E on different charts")
    rep = CheckReport("jacobi-structure")
    r1 = schouten_bracket(lam, lam) - wedge_v(KVector.from_vector(e_field), lam).scale(2)
    for idx, e in r1.items():
        rep.require_zero(f"[L,L]-2E^L [{idx}]", zt(e))
    r2 = schouten_bracket(lam, KVector.from_vector(e_field))
    for idx, e in r2.items():
        rep.require_zero(f"[L,E] [{idx}]", zt(e))
    return JacobiStructure(lam.chart, lam, e_field, rep)


def jacobi_bracket(f: Expr, g: Expr, j: JacobiStructure) -> Expr:
    return j.lam.pair(d_scalar(f), d_scalar(g)) + f * j.e_field.apply_to(g) - g * j.e_field.apply_to(f)


def lambda_sharp(j: JacobiStructure, alpha: KForm) -> VectorField:
    """(sharp a)^i = sum_j L^ij a_j, so that b(sharp a) = L(b, a)."""
    chart = j.chart
    co = alpha.covector()
    mat = j.full_matrix()
    return VectorField(chart, [
        sum((mat[i][jj] * co[jj] for jj in range(chart.dim)), chart.zero())
        for i in range(chart.dim)
    ])


def hamiltonian_vf(f: Expr, j: JacobiStructure) -> VectorField:
    """X_f = sharp(df) - f E, the unique field with {g,f} = X_f g + g Ef."""
    return lambda_sharp(j, d_scalar(f)) - j.e_field.scale(f)


def check_jh_compatibility(
    k: Operator11,
    j: JacobiStructure,
    omega: Optional[KForm] = None,
    zt: ZeroTester = ZeroTester(),
) -> CheckReport:
    """K L = L K^T componentwise; optionally the symplectic special case
    O K = K^T O for a supplied nondegenerate 2-form."""
    rep = CheckReport("jh-compatibility")
    n = j.chart.dim
    lam = j.full_matrix()
    km = k.matrix
    for i in range(n):
        for jj in range(n):
            lhs = sum((km[i][a] * lam[a][jj] for a in range(n)), j.chart.zero())
            rhs = sum((lam[i][a] * km[jj][a] for a in range(n)), j.chart.zero())
            resid = lhs - rhs
            if not resid.is_zero_expr():
                rep.require_zero(f"(KL - LK^T)[{i}][{jj}]", zt(resid))
    if omega is not None:
        om = [[omega[(i, jj)] for jj in range(n)] for i in range(n)]
        for i in range(n):
            for jj in range(n):
                lhs = sum((om[i][a] * km[a][jj] for a in range(n)), j.chart.zero())
                rhs = sum((km[a][i] * om[a][jj] for a in range(n)), j.chart.zero())
                resid = lhs - rhs
                if not resid.is_zero_expr():
                    rep.require_zero(f"(OK - K^T O)[{i}][{jj}]", zt(resid))
    return rep


def proposition_involutivity_check(
    h: Expr,
    basis: HaantjesBasis,
    j: JacobiStructure,
    zt: ZeroTester = ZeroTester(),
) -> CheckReport:
    """On a Jacobi-Haantjes chain: {H_i,H_j} = H_i E H_j - H_j E H_i for all
    potential pairs, and the evolution consequence dH_i/dt = -H E H_i."""
    rep = CheckReport("jh-involutivity")
    chain = verify_chain(h, basis, zt)
    if not chain.passed:
        return rep.reject("chain verification failed: " + chain.summary())
    for nm, k in zip(basis.names, basis.operators):
        sub = check_jh_compatibility(k, j, zt=zt)
        if not sub.passed:
            return rep.reject(f"operator {nm} not JH-compatible")
    pots = chain.potentials
    if any(p is None for p in pots):
        return rep.reject("potential recovery failed; cannot state bracket identities")
    e = j.e_field
    for a in range(len(pots)):
        for b in range(a + 1, len(pots)):
            ha, hb = pots[a], pots[b]
            resid = jacobi_bracket(ha, hb, j) - (ha * e.apply_to(hb) - hb * e.apply_to(ha))
            rep.require_zero(f"{{H{a+1},H{b+1}}} identity", zt(resid))
    xh = hamiltonian_vf(h, j)
    for a, ha in enumerate(pots):
        resid = jacobi_bracket(ha, h, j) - (ha * e.apply_to(h) - h * e.apply_to(ha))
        rep.require_zero(f"{{H{a+1},H}} identity", zt(resid))
        evol = xh.apply_to(ha) + h * e.apply_to(ha)
        rep.require_zero(f"dH{a+1}/dt = -H E H{a+1}", zt(evol))
    rep.data["potentials"] = pots
    return rep


# ---------------------------------------------------------------------------
# Particular integrals


@dataclass
class ParticularIntegralWitness:
    """How to certify {f_i, H} = sum_j a^i_j f_j.

    ``coefficients`` holds the a^i_j matrix for the symbolic mode; the
    sampled mode searches the common zero set M_f numerically instead.
    ``pair_coefficients`` optionally certifies particular involution
    {f_i, f_j} = sum_k a^{ij}_k f_k symbolically.
    """

    coefficients: Optional[Sequence[Sequence[Expr]]] = None
    pair_coefficients: Optional[dict] = None
    mode: str = "symbolic-coefficients"
    newton_starts: int = 32
    accept_tol: float = 1e-10
    check_tol: float = 1e-7


def particular_integral_check(
    f_list: Sequence[Expr],
    h: Expr,
    j: JacobiStructure,
    witness: ParticularIntegralWitness,
    zt: ZeroTester = ZeroTester(),
) -> CheckReport:
    rep = CheckReport("particular-integrals")
    k = len(f_list)
    if witness.mode == "symbolic-coefficients":
        if witness.coefficients is None:
            return rep.reject("symbolic mode needs coefficients")
        for i, fi in enumerate(f_list):
            resid = jacobi_bracket(fi, h, j)
            for jj, fj in enumerate(f_list):
                resid = resid - witness.coefficients[i][jj] * fj
            rep.require_zero(f"{{f{i+1},H}} - sum a f", zt(resid))
        if witness.pair_coefficients is not None:
            for (a, b), coeffs in witness.pair_coefficients.items():
                resid = jacobi_bracket(f_list[a], f_list[b], j)
                for jj, fj in enumerate(f_list):
                    resid = resid - coeffs[jj] * fj
                rep.require_zero(f"{{f{a+1},f{b+1}}} - sum a f", zt(resid))
        # conservation vs dissipation bookkeeping: a == 0 rows are constants
        # of motion in the bracket sense, yet may still be dissipated.
        xh = hamiltonian_vf(h, j)
        for i, fi in enumerate(f_list):
            if witness.coefficients and all(c.is_zero_expr() for c in witness.coefficients[i]):
                rate = xh.apply_to(fi)
                rep.data.setdefault("evolution_rates", {})[f"f{i+1}"] = str(rate)
                if not zt(rate).accepts_zero:
                    rep.notes.append(
                        f"f{i+1}: bracket-involution holds but X_H f{i+1} != 0 (dissipated)"
                    )
        return rep
    # sampled-on-Mf mode
    pts = _sample_level_set(f_list, witness, j.chart)
    if not pts:
        rep.status = "unknown"
        rep.notes.append("no M_f points found")
        return rep
    rep.data["mf_points"] = len(pts)
    brackets = [jacobi_bracket(fi, h, j) for fi in f_list]
    pair_brackets = {
        (a, b): jacobi_bracket(f_list[a], f_list[b], j)
        for a in range(k) for b in range(a + 1, k)
    }
    worst = 0.0
    for pt in pts:
        for i, br in enumerate(brackets):
            worst = max(worst, abs(eval_numeric(br, pt)))
        for br in pair_brackets.values():
            worst = max(worst, abs(eval_numeric(br, pt)))
    rep.data["max_residual_on_Mf"] = worst
    if worst < witness.check_tol:
        rep.details.append(("residuals on M_f", f"< {witness.check_tol} at {len(pts)} points"))
        rep.notes.append("sampled certification only (probably-zero grade)")
    else:
        rep.reject(f"residual {worst:.3e} on M_f exceeds {witness.check_tol}")
    return rep


def _sample_level_set(f_list, witness, chart, seed: int = 0):
    """Newton refinement toward f_i = 0 from seeded random starts."""
    rng = random.Random(seed)
    names = chart.coords
    pts = []
    grads = [[fi.diff(i) for i in range(chart.dim)] for fi in f_list]
    for _ in range(witness.newton_starts):
        x = np.array([rng.uniform(-2, 2) for _ in names])
        ok = False
        for _ in range(40):
            pt = dict(zip(names, x))
            try:
                vals = np.array([eval_numeric(fi, pt) for fi in f_list])
            except Exception:
                break
            if np.max(np.abs(vals)) < witness.accept_tol:
                ok = True
                break
            try:
                jac = np.array([[eval_numeric(g, pt) for g in row] for row in grads])
            except Exception:
                break
            step, *_ = np.linalg.lstsq(jac, -vals, rcond=None)
            if not np.all(np.isfinite(step)):
                break
            x = x + step
        if ok:
            pts.append(dict(zip(names, x)))
    return pts


# ---------------------------------------------------------------------------
# Poissonization


def poissonize(j: JacobiStructure, zt: ZeroTester = ZeroTester(), test_pairs: Sequence = ()) -> tuple:
    """P~ = e^{ -t }(L + dt ^ E) on the chart extended by t.

    Returns (p_tilde, report); the report certifies [P~,P~] = 0 and, for
    each supplied (f, g) pair, the bracket restriction identity with the
    liftings f~ = e^t f.
    """
    chart = j.chart
    big = chart.extended("t")
    it = big.dim - 1
    t = big.coord(it)
    damp = exp_(-t)
    comps = {}
    for (a, b), v in j.lam.components.items():
        comps[(a, b)] = v.on_chart(big) * damp
    for a, ea in enumerate(j.e_field.components):
        if not ea.is_zero_expr():
            # dt ^ E = sum_a E^a dt ^ d_a = -sum_a E^a d_a ^ dt
            comps[(a, it)] = comps.get((a, it), big.zero()) - ea.on_chart(big) * damp
    p_tilde = KVector(big, 2, comps)
    rep = CheckReport("poissonization")
    sn = schouten_bracket(p_tilde, p_tilde)
    for idx, e in sn.items():
        rep.require_zero(f"[P~,P~] [{idx}]", zt(e))
    et = exp_(t)
    for f, g in test_pairs:
        fl = f.on_chart(big) * et
        gl = g.on_chart(big) * et
        pb = p_tilde.pair(d_scalar(fl), d_scalar(gl))
        restricted = (et * pb).subst({it: big.zero()})
        resid = restricted - jacobi_bracket(f, g, j).on_chart(big)
        rep.require_zero(f"bracket restriction ({f},{g})", zt(resid))
    return p_tilde, rep


def poissonize_lift_check(
    k: Operator11,
    j: JacobiStructure,
    zt: ZeroTester = ZeroTester(),
) -> CheckReport:
    """Trivial lift K~ = K (+) 1 against the Poissonized bivector.

    K~ P~ = P~ K~^T holds exactly when K L = L K^T and K E = E; both
    prerequisites are reported so failures explain themselves.
    """
    rep = CheckReport("poissonization-lift")
    chart = j.chart
    p_tilde, _ = poissonize(j, zt)
    big = p_tilde.chart
    n = chart.dim
    km = [[k.matrix[i][jj].on_chart(big) for jj in range(n)] for i in range(n)]
    for i in range(n):
        km[i].append(big.zero())
    km.append([big.zero()] * n + [big.one()])
    lam = p_tilde.full_matrix()
    m = big.dim
    for i in range(m):
        for jj in range(m):
            lhs = sum((km[i][a] * lam[a][jj] for a in range(m)), big.zero())
            rhs = sum((lam[i][a] * km[jj][a] for a in range(m)), big.zero())
            resid = lhs - rhs
            if not resid.is_zero_expr():
                rep.require_zero(f"(K~P~ - P~K~^T)[{i}][{jj}]", zt(resid))
    base = check_jh_compatibility(k, j, zt=zt)
    ke = VectorField(chart, [
        sum((k.matrix[i][a] * j.e_field[a] for a in range(n)), chart.zero())
        for i in range(n)
    ])
    ke_res = ke - j.e_field
    rep.data["KL=LK^T"] = base.status
    rep.data["KE=E"] = "pass" if all(zt(c).accepts_zero for c in ke_res.components) else "fail"
    return rep
