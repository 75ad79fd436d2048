"""Nijenhuis and Haantjes torsions, Haantjes algebras and chains.

Torsions are reported on the coordinate frame.  `nijenhuis_eval` /
`haantjes_eval` expand the defining formulas literally on arbitrary vector
fields; the frame tables exploit tensoriality (itself a tested property) to
contract composite arguments through the tables instead of re-deriving
brackets of composite fields.
"""

from __future__ import annotations

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
    exterior_derivative,
    lie_bracket,
    op_apply,
    op_commutator,
    op_compose,
    op_transpose_apply,
    wedge,
    wedge_v,
)
from .symexpr import (
    Chart,
    Expr,
    SubstitutionError,
    ZeroCertainty,
    ZeroTester,
    eval_numeric,
    fn_symbol,
    integrate_unit_param,
    param,
    weakest,
)

__all__ = [
    "ChainReport",
    "HaantjesBasis",
    "VectorValued2Form",
    "chain_codistribution",
    "check_haantjes_algebra",
    "frobenius_codistribution",
    "frobenius_distribution",
    "haantjes_eval",
    "haantjes_torsion",
    "invariance_check",
    "is_haantjes",
    "nijenhuis_eval",
    "nijenhuis_torsion",
    "spectral_report",
    "verify_chain",
]


class VectorValued2Form:
    """tau(X, Y) on the frame: one VectorField per sorted index pair."""

    __slots__ = ("chart", "values")

    def __init__(self, chart: Chart, values: dict):
        self.chart = chart
        self.values = values  # (i, j) i<j -> VectorField

    def __getitem__(self, pair) -> VectorField:
        i, j = pair
        if i == j:
            return VectorField.zero(self.chart)
        if i < j:
            return self.values.get((i, j), VectorField.zero(self.chart))
        return -self.values.get((j, i), VectorField.zero(self.chart))

    def pairs(self):
        n = self.chart.dim
        return [(i, j) for i in range(n) for j in range(i + 1, n)]

    def is_zero(self) -> bool:
        return all(v.is_zero_field() for v in self.values.values())

    def components(self):
        for (i, j), v in sorted(self.values.items()):
            for k, c in enumerate(v.components):
                if not c.is_zero_expr():
                    yield (i, j, k), c


def nijenhuis_eval(k: Operator11, x: VectorField, y: VectorField) -> VectorField:
    """tau_K(X, Y) = K^2[X,Y] + [KX,KY] - K([X,KY] + [KX,Y]), literally."""
    kx, ky = op_apply(k, x), op_apply(k, y)
    b = lie_bracket(x, y)
    out = op_apply(k, op_apply(k, b))
    out = out + lie_bracket(kx, ky)
    out = out - op_apply(k, lie_bracket(x, ky) + lie_bracket(kx, y))
    return out


def nijenhuis_torsion(k: Operator11) -> VectorValued2Form:
    chart = k.chart
    n = chart.dim
    cols = [k.column(j) for j in range(n)]
    values = {}
    for i in range(n):
        for j in range(i + 1, n):
            # [d_i, d_j] = 0, [d_i, K d_j] = d_i(K d_j) componentwise
            t = lie_bracket(cols[i], cols[j])
            di_kj = VectorField(chart, [c.diff(i) for c in cols[j].components])
            dj_ki = VectorField(chart, [c.diff(j) for c in cols[i].components])
            t = t - op_apply(k, di_kj - dj_ki)
            if not t.is_zero_field():
                values[(i, j)] = t
    return VectorValued2Form(chart, values)


def haantjes_eval(k: Operator11, x: VectorField, y: VectorField) -> VectorField:
    """H_K(X, Y) from the defining formula, torsion arguments expanded
    literally (slow route, used as an oracle)."""
    kx, ky = op_apply(k, x), op_apply(k, y)
    out = op_apply(k, op_apply(k, nijenhuis_eval(k, x, y)))
    out = out + nijenhuis_eval(k, kx, ky)
    out = out - op_apply(k, nijenhuis_eval(k, x, ky) + nijenhuis_eval(k, kx, y))
    return out


def haantjes_torsion(k: Operator11) -> VectorValued2Form:
    """H_K on the frame, contracting through the Nijenhuis table.

    tau is tensorial, so tau(K d_i, K d_j) = sum K^a_i K^b_j tau(d_a, d_b);
    tensoriality itself is exercised by the test suite against the literal
    evaluation.
    """
    chart = k.chart
    n = chart.dim
    tau = nijenhuis_torsion(k)
    table = [[tau[(a, b)] for b in range(n)] for a in range(n)]
    values = {}
    for i in range(n):
        for j in range(i + 1, n):
            t_ij = table[i][j]
            h = op_apply(k, op_apply(k, t_ij))
            acc = VectorField.zero(chart)
            for a in range(n):
                ka_i = k.matrix[a][i]
                if ka_i.is_zero_expr():
                    continue
                for b in range(n):
                    kb_j = k.matrix[b][j]
                    if kb_j.is_zero_expr() or table[a][b].is_zero_field():
                        continue
                    acc = acc + table[a][b].scale(ka_i * kb_j)
            h = h + acc
            mid = VectorField.zero(chart)
            for b in range(n):
                kb_j = k.matrix[b][j]
                if not kb_j.is_zero_expr() and not table[i][b].is_zero_field():
                    mid = mid + table[i][b].scale(kb_j)
            for a in range(n):
                ka_i = k.matrix[a][i]
                if not ka_i.is_zero_expr() and not table[a][j].is_zero_field():
                    mid = mid + table[a][j].scale(ka_i)
            h = h - op_apply(k, mid)
            if not h.is_zero_field():
                values[(i, j)] = h
    return VectorValued2Form(chart, values)


def is_haantjes(k: Operator11, zt: ZeroTester = ZeroTester()) -> CheckReport:
    rep = CheckReport("haantjes-torsion-vanishes")
    h = haantjes_torsion(k)
    if h.is_zero():
        rep.details.append(("all components", "structurally zero"))
        return rep
    for (i, j, c), e in h.components():
        rep.require_zero(f"H[{i},{j}]^{c}", zt(e))
    return rep


@dataclass
class HaantjesBasis:
    """An ordered family of operator fields proposed as a Haantjes basis."""

    operators: list
    abelian_required: bool = True
    names: Optional[list] = None

    def __post_init__(self):
        if not self.operators:
            raise ValueError("empty basis")
        chart = self.operators[0].chart
        for k in self.operators:
            if k.chart != chart:
                raise ValueError("basis operators on different charts")
        if self.names is None:
            self.names = [f"K{i+1}" for i in range(len(self.operators))]

    @property
    def chart(self) -> Chart:
        return self.operators[0].chart


def check_haantjes_algebra(basis: HaantjesBasis, zt: ZeroTester = ZeroTester()) -> CheckReport:
    """Generators Haantjes, function-linear module closure with fresh
    abstract coefficients, ring closure under composition, and (optionally)
    commutativity."""
    rep = CheckReport("haantjes-algebra")
    chart = basis.chart
    ops = basis.operators
    names = basis.names
    for nm, k in zip(names, ops):
        rep.merge(CheckReport(f"generator {nm}", status=is_haantjes(k, zt).status))
    f = fn_symbol(chart, "_modf")
    g = fn_symbol(chart, "_modg")
    for i, (nm, k) in enumerate(zip(names, ops)):
        sub = is_haantjes(k.scale(f), zt)
        rep.merge(CheckReport(f"module f*{nm}", status=sub.status, details=sub.details))
        for j in range(i + 1, len(ops)):
            comb = k.scale(f) + ops[j].scale(g)
            sub = is_haantjes(comb, zt)
            rep.merge(CheckReport(f"module f*{nm}+g*{names[j]}", status=sub.status, details=sub.details))
    for i, ki in enumerate(ops):
        for j, kj in enumerate(ops):
            sub = is_haantjes(op_compose(ki, kj), zt)
            rep.merge(CheckReport(f"ring {names[i]}*{names[j]}", status=sub.status, details=sub.details))
    if basis.abelian_required:
        for i in range(len(ops)):
            for j in range(i + 1, len(ops)):
                comm = op_commutator(ops[i], ops[j])
                for a, row in enumerate(comm.matrix):
                    for b, e in enumerate(row):
                        if not e.is_zero_expr():
                            rep.require_zero(f"[{names[i]},{names[j]}][{a}][{b}]", zt(e))
    rep._update_certainty()
    return rep


# ---------------------------------------------------------------------------
# Chains


@dataclass
class ChainReport:
    generator: Expr
    closedness: list = field(default_factory=list)      # (op name, ZeroCertainty-ish status)
    potentials: list = field(default_factory=list)      # Optional[Expr] per operator
    forms: list = field(default_factory=list)           # the 1-forms K_i^T dH
    rank: Optional[int] = None
    rank_note: str = ""
    frobenius: Optional[CheckReport] = None
    status: str = "pass"

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def summary(self) -> str:
        pots = [str(p) if p is not None else "-" for p in self.potentials]
        return f"chain: {self.status}, rank {self.rank}, potentials {pots}"


def _radial_potential(omega: KForm) -> Optional[Expr]:
    """H(x) = int_0^1 sum_j omega_j(t x) x^j dt, exact for polynomial forms."""
    chart = omega.chart
    t = param(chart, "_t")
    mapping = {i: t * chart.coord(i) for i in range(chart.dim)}
    acc = chart.zero()
    for j in range(chart.dim):
        c = omega[(j,)]
        if c.is_zero_expr():
            continue
        if not c.is_polynomial():
            return None
        try:
            acc = acc + c.subst(mapping) * chart.coord(j)
        except SubstitutionError:
            return None
    try:
        return integrate_unit_param(acc, "_t")
    except Exception:
        return None


def generic_rank(forms: Sequence[KForm], zt: ZeroTester) -> tuple:
    """Largest k with a provably nonzero k-fold wedge; numeric fallback.

    Returns (rank, note).
    """
    m = len(forms)
    if m == 0:
        return 0, ""
    w = forms[0]
    rank = 0
    note = ""
    for k in range(m):
        w = forms[k] if k == 0 else wedge(w, forms[k])
        cert = _first_nonzero(w, zt)
        if cert is None:
            break
        rank = k + 1
        if cert.tag != "proven_nonzero":
            note = "rank certified numerically"
    return rank, note


def _first_nonzero(w: KForm, zt: ZeroTester) -> Optional[ZeroCertainty]:
    best = None
    for _, e in w.items():
        c = zt(e)
        if c.tag == "proven_nonzero":
            return c
        if c.rejects_zero:
            best = c
    return best


def verify_chain(h: Expr, basis: HaantjesBasis, zt: ZeroTester = ZeroTester()) -> ChainReport:
    """Check d(K_i^T dH) = 0 per operator, recover potentials where the
    forms are polynomial, and test independence plus Frobenius integrability
    of the chain codistribution."""
    chart = basis.chart
    dh = d_scalar(h)
    rep = ChainReport(generator=h)
    for nm, k in zip(basis.names, basis.operators):
        omega = op_transpose_apply(k, dh)
        rep.forms.append(omega)
        closed = weakest(zt(e) for _, e in exterior_derivative(omega).items())
        rep.closedness.append((nm, closed))
        if not closed.accepts_zero:
            rep.status = "fail"
            rep.potentials.append(None)
            continue
        # potentials only when closedness is proven and d(pot) = omega exactly
        pot = None
        if closed.is_proven_zero:
            pot = _radial_potential(omega)
            if pot is not None:
                resid = weakest(zt(e) for _, e in (d_scalar(pot) - omega).items())
                if not resid.is_proven_zero:
                    pot = None
        rep.potentials.append(pot)
    rep.rank, rep.rank_note = generic_rank(rep.forms, zt)
    if rep.rank < len(basis.operators):
        rep.rank_note = (rep.rank_note + "; " if rep.rank_note else "") + "chain forms not independent"
        rep.status = "fail" if rep.status == "pass" else rep.status
    if rep.status == "pass":
        rep.frobenius = frobenius_codistribution(rep.forms, zt)
        if not rep.frobenius.passed:
            rep.status = rep.frobenius.status
    return rep


def chain_codistribution(h: Expr, basis: HaantjesBasis) -> list:
    dh = d_scalar(h)
    return [op_transpose_apply(k, dh) for k in basis.operators]


def frobenius_codistribution(forms: Sequence[KForm], zt: ZeroTester = ZeroTester()) -> CheckReport:
    """d alpha_i ^ alpha_1 ^ ... ^ alpha_m = 0 for each i."""
    rep = CheckReport("frobenius-codistribution")
    if not forms:
        return rep
    big = forms[0]
    for f in forms[1:]:
        big = wedge(big, f)
    rank, note = generic_rank(list(forms), zt)
    if rank < len(forms):
        rep.notes.append(f"rank-deficient codistribution (rank {rank})")
    for i, a in enumerate(forms):
        w = wedge(exterior_derivative(a), big)
        for idx, e in w.items():
            rep.require_zero(f"d a{i+1} ^ a1..am [{idx}]", zt(e))
    return rep


def frobenius_distribution(fields: Sequence[VectorField], zt: ZeroTester = ZeroTester()) -> CheckReport:
    """Closure of pairwise Lie brackets modulo the span of the fields."""
    rep = CheckReport("frobenius-distribution")
    if not fields:
        return rep
    chart = fields[0].chart
    big = KVector.from_vector(fields[0])
    for f in fields[1:]:
        big = wedge_v(big, KVector.from_vector(f))
    cert = None
    for _, e in big.items():
        c = zt(e)
        if c.tag == "proven_nonzero":
            cert = c
            break
    if cert is None:
        rep.notes.append("rank-deficient distribution; span test unreliable")
    for i in range(len(fields)):
        for j in range(i + 1, len(fields)):
            br = lie_bracket(fields[i], fields[j])
            w = wedge_v(big, KVector.from_vector(br))
            for idx, e in w.items():
                rep.require_zero(f"[X{i+1},X{j+1}] in span [{idx}]", zt(e))
    return rep


def invariance_check(k: Operator11, forms: Sequence[KForm], zt: ZeroTester = ZeroTester()) -> CheckReport:
    """K^T alpha_i must stay in span{alpha_1..alpha_m}."""
    rep = CheckReport("invariance")
    if not forms:
        return rep
    rank, note = generic_rank(list(forms), zt)
    if rank < len(forms):
        rep.notes.append(f"input forms dependent (rank {rank}); membership test unreliable")
        rep.status = "unknown"
    big = forms[0]
    for f in forms[1:]:
        big = wedge(big, f)
    for i, a in enumerate(forms):
        w = wedge(big, op_transpose_apply(k, a))
        for idx, e in w.items():
            rep.require_zero(f"K^T a{i+1} in span [{idx}]", zt(e))
    return rep


# ---------------------------------------------------------------------------
# Pointwise numeric spectral report


def spectral_report(
    k: Operator11,
    points: Sequence[dict],
    seed: int = 0,
    params: Optional[dict] = None,
    fn_bindings: Optional[dict] = None,
    cluster_tol: float = 1e-8,
) -> dict:
    """Numeric eigen-structure of K at sample points.

    For each usable point: clustered eigenvalues, algebraic multiplicities,
    generalized eigenspace dimensions (rank saturation of (K - l I)^r, Riesz
    index capped at dim), and whether all multiplicities are even.
    """
    chart = k.chart
    n = chart.dim
    out = {"points": [], "skipped": [], "all_multiplicities_even": True, "seed": seed}
    for pt in points:
        try:
            mat = np.array(
                [[eval_numeric(e, pt, params, fn_bindings) for e in row] for row in k.matrix],
                dtype=float,
            )
        except Exception as exc:
            out["skipped"].append({"point": pt, "reason": str(exc)})
            continue
        eigs = np.linalg.eigvals(mat)
        clusters: list = []
        scale = max(1.0, float(np.max(np.abs(eigs))))
        for lam in sorted(eigs, key=lambda v: (v.real, v.imag)):
            for cl in clusters:
                if abs(lam - cl[0]) <= cluster_tol * scale:
                    cl[1].append(lam)
                    break
            else:
                clusters.append([lam, [lam]])
        entry = {"point": pt, "eigenvalues": []}
        for center, members in clusters:
            alg = len(members)
            lam = complex(np.mean(members))
            a = mat - lam * np.eye(n)
            prev_rank = n
            riesz = n
            dims = []
            power = np.eye(n)
            for r in range(1, n + 1):
                power = power @ a
                rank = int(np.linalg.matrix_rank(power, tol=1e-9 * scale**r if scale > 0 else None))
                dims.append(n - rank)
                if rank == prev_rank:
                    riesz = r - 1
                    break
                prev_rank = rank
            gen_dim = dims[-1]
            entry["eigenvalues"].append(
                {
                    "value": [lam.real, lam.imag],
                    "algebraic": alg,
                    "geometric": dims[0],
                    "generalized_dim": gen_dim,
                    "riesz_index": riesz,
                }
            )
            if alg % 2 == 1:
                out["all_multiplicities_even"] = False
        out["points"].append(entry)
    out["omega_h_consistent"] = out["all_multiplicities_even"]
    return out
