"""Model language, check runner, and report emission.

A model is a line-oriented text file:

    # comments run to end of line
    chart NAME (id, id, ...) [generic | darboux-contact N | darboux-symplectic N | lcs-local N]
    scalar NAME = <scalar expr>
    form NAME = <form expr>            # d(expr), /\ wedge, scalar * form
    vector NAME = (e1, ..., en)
    bivector NAME = <tuple> /\ <tuple> [+ ...]
    operator NAME = [[...], [...]]
    extop NAME = (OP, VECTOR, FORM, SCALAR)
    contact NAME = FORM
    lcs NAME = (FORM2, FORM1)
    jacobi NAME = (BIVECTOR, VECTOR)
    check <directive ...> [expect fail]

Declarations bind to the most recent chart statement.  Structures are
validated lazily when checks run, because validation itself consumes the
seeded zero tester.  Reports are deterministic for a fixed (model, seed,
samples, tol); wall-times live outside the comparable section.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import __version__
from .checks import CheckReport
from .contact import (
    contact_hamiltonian_vf,
    is_dissipated,
    techain_check,
    validate_contact,
)
from .extended import (
    ExtendedBasis,
    ExtendedOperator,
    check_ejh,
    thm_main_check,
    verify_ext_chain,
)
from .geometry import KForm, KVector, Operator11, VectorField, wedge, wedge_v
from .jacobi import check_jh_compatibility, jacobi_bracket, poissonize, validate_jacobi
from .lcs import check_lcsh, eta_KE_check, theorem9_check, validate_lcs
from .symexpr import (
    Chart,
    Expr,
    ParseError,
    ZeroTester,
    format_expr,
    parse_scalar,
)
from .torsion import (
    HaantjesBasis,
    check_haantjes_algebra,
    is_haantjes,
    verify_chain,
)

__all__ = ["Model", "Report", "main", "parse_model", "run_checks", "format_model"]


# ---------------------------------------------------------------------------
# Model representation


@dataclass
class Declaration:
    kind: str
    name: str
    chart_name: Optional[str]
    payload: dict
    line: int


@dataclass
class Directive:
    verb: str
    fields: dict
    chart_name: Optional[str]
    line: int
    expect_fail: bool = False

    def label(self) -> str:
        parts = [self.verb]
        for key in sorted(self.fields):
            v = self.fields[key]
            if isinstance(v, list):
                parts.append(f"{key}={' '.join(map(str, v))}")
            else:
                parts.append(f"{key}={v}")
        if self.expect_fail:
            parts.append("expect=fail")
        return " ".join(parts)


@dataclass
class Model:
    charts: dict = field(default_factory=dict)
    declarations: list = field(default_factory=list)
    directives: list = field(default_factory=list)
    order: list = field(default_factory=list)   # statement order for fmt

    def declaration(self, name: str) -> Declaration:
        for d in self.declarations:
            if d.name == name:
                return d
        raise KeyError(name)


# -- line-level parsing helpers


def _strip_comment(line: str) -> str:
    out = []
    for ch in line:
        if ch == "#":
            break
        out.append(ch)
    return "".join(out)


def _split_top(text: str, sep: str, line: int) -> list:
    """Split on sep at paren/bracket depth zero."""
    parts = []
    depth = 0
    cur = []
    for ch in text:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
            if depth < 0:
                raise ParseError("unbalanced parentheses", line, 1)
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


def _expect_wrapped(text: str, open_ch: str, close_ch: str, line: int) -> str:
    t = text.strip()
    if not (t.startswith(open_ch) and t.endswith(close_ch)):
        raise ParseError(f"expected {open_ch}...{close_ch}", line, 1)
    return t[1:-1]


def parse_model(text: str) -> Model:
    model = Model()
    current: Optional[Chart] = None
    names: dict = {}  # name -> (kind, declaration)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        if head == "chart":
            name, chart = _parse_chart_stmt(rest, lineno)
            if name in model.charts:
                raise ParseError(f"chart {name!r} redeclared", lineno, 1)
            model.charts[name] = chart
            model.order.append(("chart", name))
            current = chart
            continue
        if head == "check":
            model.directives.append(_parse_directive(rest, current, lineno))
            model.order.append(("check", len(model.directives) - 1))
            continue
        if head not in ("scalar", "form", "vector", "bivector", "operator",
                        "extop", "contact", "lcs", "jacobi"):
            raise ParseError(f"unknown statement {head!r}", lineno, 1)
        if current is None:
            raise ParseError("declaration before any chart", lineno, 1)
        name, _, rhs = rest.partition("=")
        name = name.strip()
        rhs = rhs.strip()
        if not name.isidentifier():
            raise ParseError(f"bad name {name!r}", lineno, 1)
        if name in names or name in model.charts:
            raise ParseError(f"name {name!r} redeclared", lineno, 1)
        if not rhs:
            raise ParseError("missing right-hand side", lineno, 1)
        decl = Declaration(head, name, current.name, {"rhs": rhs}, lineno)
        _build_declaration(decl, current, names, lineno)
        names[name] = (head, decl)
        model.declarations.append(decl)
        model.order.append(("decl", name))
    _resolve_directives(model, names)
    return model


def _parse_chart_stmt(rest: str, line: int):
    name, _, tail = rest.partition("(")
    name = name.strip()
    if not name.isidentifier():
        raise ParseError(f"bad chart name {name!r}", line, 1)
    body, _, kind_text = tail.partition(")")
    coords = tuple(c.strip() for c in body.split(",") if c.strip())
    if not coords:
        raise ParseError("chart needs coordinates", line, 1)
    kind_text = kind_text.strip()
    if not kind_text or kind_text == "generic":
        kind = ("generic",)
    else:
        tag, _, num = kind_text.partition(" ")
        if tag not in ("darboux-contact", "darboux-symplectic", "lcs-local") or not num.strip().isdigit():
            raise ParseError(f"bad chart kind {kind_text!r}", line, 1)
        kind = (tag, int(num))
    try:
        chart = Chart(name, coords, kind)
    except ValueError as exc:
        raise ParseError(str(exc), line, 1) from None
    return name, chart


def _scalar_env(names: dict, chart: Chart) -> dict:
    env = {}
    for nm, (kind, decl) in names.items():
        if kind == "scalar" and decl.chart_name == chart.name:
            env[nm] = decl.payload["value"]
    return env


def _build_declaration(decl: Declaration, chart: Chart, names: dict, line: int):
    rhs = decl.payload["rhs"]
    env = _scalar_env(names, chart)
    if decl.kind == "scalar":
        decl.payload["value"] = parse_scalar(rhs, chart, env)
    elif decl.kind == "form":
        decl.payload["value"] = _parse_form_expr(rhs, chart, names, env, line)
    elif decl.kind == "vector":
        comps = _parse_tuple(rhs, chart, env, line)
        if len(comps) != chart.dim:
            raise ParseError(f"vector needs {chart.dim} components", line, 1)
        decl.payload["value"] = VectorField(chart, comps)
    elif decl.kind == "bivector":
        decl.payload["value"] = _parse_bivector_expr(rhs, chart, names, env, line)
    elif decl.kind == "operator":
        decl.payload["value"] = _parse_operator(rhs, chart, env, line)
    elif decl.kind == "extop":
        inner = _expect_wrapped(rhs, "(", ")", line)
        parts = [p.strip() for p in _split_top(inner, ",", line)]
        if len(parts) != 4:
            raise ParseError("extop needs (operator, vector, form, scalar)", line, 1)
        op = _lookup(names, parts[0], "operator", line)
        vec = _lookup(names, parts[1], "vector", line)
        form = _lookup(names, parts[2], "form", line)
        if parts[3] in names:
            sc = _lookup(names, parts[3], "scalar", line)
        else:
            sc = parse_scalar(parts[3], chart, env)
        decl.payload["value"] = ExtendedOperator(op, vec, form, sc, name=decl.name)
    elif decl.kind == "contact":
        decl.payload["form"] = _lookup(names, rhs.strip(), "form", line)
    elif decl.kind == "lcs":
        inner = _expect_wrapped(rhs, "(", ")", line)
        parts = [p.strip() for p in _split_top(inner, ",", line)]
        if len(parts) != 2:
            raise ParseError("lcs needs (2-form, 1-form)", line, 1)
        decl.payload["omega"] = _lookup(names, parts[0], "form", line)
        decl.payload["eta"] = _lookup(names, parts[1], "form", line)
    elif decl.kind == "jacobi":
        inner = _expect_wrapped(rhs, "(", ")", line)
        parts = [p.strip() for p in _split_top(inner, ",", line)]
        if len(parts) != 2:
            raise ParseError("jacobi needs (bivector, vector)", line, 1)
        decl.payload["lam"] = _lookup(names, parts[0], "bivector", line)
        decl.payload["e"] = _lookup(names, parts[1], "vector", line)


def _lookup(names: dict, name: str, kind: str, line: int):
    if name not in names:
        raise ParseError(f"unknown identifier {name!r}", line, 1)
    got, decl = names[name]
    if got != kind:
        raise ParseError(f"{name!r} is a {got}, expected {kind}", line, 1)
    return decl.payload["value"] if "value" in decl.payload else decl


def _parse_tuple(text: str, chart: Chart, env: dict, line: int) -> list:
    inner = _expect_wrapped(text, "(", ")", line)
    return [parse_scalar(p, chart, env) for p in _split_top(inner, ",", line)]


def _parse_operator(text: str, chart: Chart, env: dict, line: int) -> Operator11:
    inner = _expect_wrapped(text, "[", "]", line)
    rows = []
    for chunk in _split_top(inner, ",", line):
        chunk = chunk.strip()
        if not chunk:
            continue
        row_txt = _expect_wrapped(chunk, "[", "]", line)
        rows.append([parse_scalar(p, chart, env) for p in _split_top(row_txt, ",", line)])
    if not rows:
        raise ParseError("empty operator", line, 1)
    width = len(rows[0])
    for r in rows:
        if len(r) != width:
            raise ParseError(f"row length mismatch at line {line}", line, 1)
    if len(rows) != chart.dim or width != chart.dim:
        raise ParseError(f"operator must be {chart.dim}x{chart.dim}", line, 1)
    return Operator11(chart, rows)


def _parse_form_expr(text: str, chart: Chart, names: dict, env: dict, line: int) -> KForm:
    """Sums of products of scalar factors and form primaries (d(expr),
    form names, parenthesised sub-expressions) joined by * and /\\ ."""
    total: Optional[KForm] = None
    for signed in _signed_terms(text, line):
        sign, term = signed
        val = _parse_graded_term(term, chart, names, env, line, vector_mode=False)
        if isinstance(val, Expr):
            raise ParseError("scalar where a form was expected", line, 1)
        if sign < 0:
            val = -val
        total = val if total is None else total + val
    if total is None:
        raise ParseError("empty form expression", line, 1)
    return total


def _parse_bivector_expr(text: str, chart: Chart, names: dict, env: dict, line: int) -> KVector:
    total: Optional[KVector] = None
    for sign, term in _signed_terms(text, line):
        val = _parse_graded_term(term, chart, names, env, line, vector_mode=True)
        if isinstance(val, Expr):
            raise ParseError("scalar where a bivector was expected", line, 1)
        if sign < 0:
            val = -val
        total = val if total is None else total + val
    if total is None or total.degree != 2:
        raise ParseError("bivector expression must have degree 2", line, 1)
    return total


def _signed_terms(text: str, line: int):
    """Split a sum into (sign, term) pieces at depth zero."""
    depth = 0
    cur = []
    sign = 1
    first = True
    for ch in text:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if depth == 0 and ch in "+-" and cur and cur[-1] not in "*/^(,+-":
            yield sign, "".join(cur).strip()
            sign = 1 if ch == "+" else -1
            cur = []
            first = False
            continue
        if depth == 0 and ch in "+-" and not "".join(cur).strip() and first:
            sign = 1 if ch == "+" else -1
            first = False
            continue
        cur.append(ch)
    tail = "".join(cur).strip()
    if tail:
        yield sign, tail


def _split_factors(term: str, line: int):
    """Split a term into factors at * and /\\ (depth zero), keeping ops."""
    depth = 0
    cur = []
    i = 0
    ops = []
    factors = []
    while i < len(term):
        ch = term[i]
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if depth == 0 and ch == "/" and i + 1 < len(term) and term[i + 1] == "\\":
            factors.append("".join(cur).strip())
            ops.append("wedge")
            cur = []
            i += 2
            continue
        if depth == 0 and ch == "*":
            factors.append("".join(cur).strip())
            ops.append("mul")
            cur = []
            i += 1
            continue
        cur.append(ch)
        i += 1
    factors.append("".join(cur).strip())
    return factors, ops


def _is_form_factor(text: str, names: dict) -> bool:
    t = text.strip()
    if t.startswith("d(") or t.startswith("d ("):
        return True
    if t in names and names[t][0] in ("form",):
        return True
    return False


def _parse_graded_term(term: str, chart: Chart, names: dict, env: dict, line: int, vector_mode: bool):
    factors, ops = _split_factors(term, line)
    scalar = chart.one()
    graded = None
    for idx, ftxt in enumerate(factors):
        op = ops[idx - 1] if idx else None
        val = _parse_factor(ftxt, chart, names, env, line, vector_mode)
        if isinstance(val, Expr):
            if op == "wedge":
                raise ParseError("/\\ needs graded operands", line, 1)
            scalar = scalar * val
            continue
        if graded is None:
            graded = val
        elif op == "wedge" or vector_mode:
            graded = wedge_v(graded, val) if vector_mode else wedge(graded, val)
        else:
            raise ParseError("use /\\ to multiply graded objects", line, 1)
    if graded is None:
        return scalar
    return graded.scale(scalar)


def _parse_factor(text: str, chart: Chart, names: dict, env: dict, line: int, vector_mode: bool):
    t = text.strip()
    if not t:
        raise ParseError("empty factor", line, 1)
    if not vector_mode and (t.startswith("d(") or t.startswith("d (")):
        inner = t[t.index("(") + 1 : -1] if t.endswith(")") else None
        if inner is None:
            raise ParseError("unterminated d(...)", line, 1)
        from .geometry import d_scalar
        return d_scalar(parse_scalar(inner, chart, env))
    if vector_mode and t.startswith("(") and t.endswith(")") and "," in t:
        comps = _parse_tuple(t, chart, env, line)
        if len(comps) != chart.dim:
            raise ParseError(f"vector tuple needs {chart.dim} components", line, 1)
        return KVector.from_vector(VectorField(chart, comps))
    if t in names:
        kind, decl = names[t]
        if not vector_mode and kind == "form":
            return decl.payload["value"]
        if vector_mode and kind == "vector":
            return KVector.from_vector(decl.payload["value"])
        if kind == "scalar":
            return decl.payload["value"]
    if t.startswith("(") and t.endswith(")"):
        inner = t[1:-1]
        if _contains_graded(inner, names):
            if vector_mode:
                return _parse_bivector_expr(inner, chart, names, env, line)
            return _parse_form_expr(inner, chart, names, env, line)
        return parse_scalar(inner, chart, env)
    return parse_scalar(t, chart, env)


def _contains_graded(text: str, names: dict) -> bool:
    if "/\\" in text or "d(" in text.replace(" ", ""):
        return True
    for nm, (kind, _) in names.items():
        if kind in ("form", "vector") and nm in text:
            return True
    return False


# -- directives

_KEYWORDS = {"wrt", "on", "with", "equals", "potentials", "kind", "expect", "pairs", "abelian"}


def _parse_directive(rest: str, chart: Optional[Chart], line: int) -> Directive:
    tokens = rest.split()
    if not tokens:
        raise ParseError("empty check directive", line, 1)
    verb = tokens[0]
    fields: dict = {}
    expect_fail = False
    key = "args"
    i = 1
    while i < len(tokens):
        tok = tokens[i]
        if tok == "expect":
            if i + 1 >= len(tokens) or tokens[i + 1] not in ("fail", "pass"):
                raise ParseError("expect needs fail|pass", line, 1)
            expect_fail = tokens[i + 1] == "fail"
            i += 2
            continue
        if tok in _KEYWORDS:
            fields.setdefault(tok, [])
            key = tok
            i += 1
            continue
        fields.setdefault(key, []).append(tok)
        i += 1
    if chart is None:
        raise ParseError("check before any chart", line, 1)
    return Directive(verb, fields, chart.name, line, expect_fail)


def _resolve_directives(model: Model, names: dict):
    known = {
        "haantjes", "algebra", "commute", "jacobi", "contact", "lcs",
        "reeb", "hamiltonian", "dissipated", "bracket", "chain", "ejh",
        "ext_chain", "thm_main", "lcsh", "eta_ke", "theorem9", "techain",
        "poissonize", "jh",
    }
    for d in model.directives:
        if d.verb not in known:
            raise ParseError(f"unknown check directive {d.verb!r}", d.line, 1)
        for key, toks in d.fields.items():
            if key in ("equals", "potentials", "kind", "pairs", "abelian"):
                continue
            for t in toks:
                if t.isidentifier() and t not in names and not _is_coord(model, d, t):
                    raise ParseError(f"unknown identifier {t!r} in check", d.line, 1)


def _is_coord(model: Model, d: Directive, tok: str) -> bool:
    chart = model.charts.get(d.chart_name)
    return chart is not None and tok in chart.coords


# ---------------------------------------------------------------------------
# Runner


@dataclass
class Report:
    meta: dict
    entries: list = field(default_factory=list)
    timing: dict = field(default_factory=dict)
    internal_inconsistency: bool = False

    @property
    def failed(self) -> int:
        return sum(1 for e in self.entries if e["status"] == "fail")

    @property
    def exit_code(self) -> int:
        if self.internal_inconsistency:
            return 3
        return 1 if self.failed else 0

    def comparable(self) -> dict:
        return {
            "meta": self.meta,
            "directives": self.entries,
            "summary": {
                "pass": sum(1 for e in self.entries if e["status"] == "pass"),
                "fail": self.failed,
                "unknown": sum(1 for e in self.entries if e["status"] == "unknown"),
                "exit_code": self.exit_code,
            },
        }

    def comparable_text(self) -> str:
        return json.dumps(self.comparable(), sort_keys=True, indent=2) + "\n"

    def full_json(self) -> str:
        data = self.comparable()
        data["timing"] = self.timing
        return json.dumps(data, sort_keys=True, indent=2) + "\n"

    def table(self) -> str:
        lines = []
        width = max((len(e["name"]) for e in self.entries), default=10)
        for e in self.entries:
            cert = e.get("certainty") or "-"
            lines.append(f"{e['name']:<{width}}  {e['status']:<8} {cert}")
        s = self.comparable()["summary"]
        lines.append(f"{'summary':<{width}}  pass={s['pass']} fail={s['fail']} unknown={s['unknown']}")
        return "\n".join(lines)


class _Runtime:
    """Lazily materialised structures for one run."""

    def __init__(self, model: Model, zt: ZeroTester):
        self.model = model
        self.zt = zt
        self.values: dict = {}
        self.structs: dict = {}
        for d in model.declarations:
            if "value" in d.payload:
                self.values[d.name] = (d.kind, d.payload["value"])

    def chart(self, name: str) -> Chart:
        return self.model.charts[name]

    def get(self, kind: str, name: str):
        if name in self.values and self.values[name][0] == kind:
            return self.values[name][1]
        raise KeyError(f"{name!r} is not a {kind}")

    def scalar(self, tokens, chart: Chart) -> Expr:
        text = " ".join(tokens)
        env = {nm: v for nm, (k, v) in self.values.items() if k == "scalar" and v.chart == chart}
        return parse_scalar(text, chart, env)

    def structure(self, name: str):
        if name in self.structs:
            return self.structs[name]
        decl = self.model.declaration(name)
        if decl.kind == "contact":
            s = validate_contact(decl.payload["form"], self.zt)
        elif decl.kind == "lcs":
            s = validate_lcs(decl.payload["omega"], decl.payload["eta"], self.zt)
        elif decl.kind == "jacobi":
            s = validate_jacobi(decl.payload["lam"], decl.payload["e"], self.zt)
        else:
            raise KeyError(f"{name!r} is not a structure")
        self.structs[name] = s
        return s


def run_checks(model: Model, seed: int = 0, samples: int = 16, tol: float = 1e-9,
               fail_fast: bool = False) -> Report:
    zt = ZeroTester(seed=seed, samples=samples, tol=tol)
    rt = _Runtime(model, zt)
    report = Report(meta={
        "model": "inline",
        "seed": seed,
        "samples": samples,
        "tol": repr(tol),
        "version": __version__,
    })
    for idx, d in enumerate(model.directives):
        t0 = time.perf_counter()
        name = f"{idx+1:02d} {d.label()}"
        try:
            sub = _execute(d, rt)
            sub._update_certainty()
            status = sub.status
            cert = sub.certainty.tag if sub.certainty else None
            witness = _jsonable(sub.witness)
            notes = list(sub.notes)
            if any("internal-inconsistency" in n for n in notes):
                report.internal_inconsistency = True
            residual = [
                [str(lab), str(cert_ or "")] for lab, cert_ in sub.details[:6]
            ]
        except Exception as exc:  # surfaced, not raised: budget errors etc.
            status = "unknown"
            cert = None
            witness = None
            notes = [f"{type(exc).__name__}: {exc}"]
            residual = []
        if d.expect_fail:
            status = "pass" if status == "fail" else "fail"
            notes.append("expected failure")
        report.entries.append({
            "name": name,
            "status": status,
            "certainty": cert,
            "witness": witness,
            "residuals": residual,
            "notes": notes,
        })
        report.timing[name] = round(time.perf_counter() - t0, 6)
        if fail_fast and status == "fail":
            break
    return report


def _jsonable(obj):
    if obj is None:
        return None
    if isinstance(obj, dict):
        return {str(k): str(v) for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))}
    return str(obj)


def _execute(d: Directive, rt: _Runtime) -> CheckReport:
    zt = rt.zt
    chart = rt.chart(d.chart_name)
    args = d.fields.get("args", [])
    if d.verb == "haantjes":
        return is_haantjes(rt.get("operator", args[0]), zt)
    if d.verb == "algebra":
        ops = [rt.get("operator", a) for a in args]
        abelian = "abelian" in d.fields
        basis = HaantjesBasis(ops, abelian_required=abelian, names=list(args))
        return check_haantjes_algebra(basis, zt)
    if d.verb == "commute":
        from .geometry import op_commutator
        rep = CheckReport(f"commute {args[0]} {args[1]}")
        comm = op_commutator(rt.get("operator", args[0]), rt.get("operator", args[1]))
        for i, row in enumerate(comm.matrix):
            for j, e in enumerate(row):
                if not e.is_zero_expr():
                    rep.require_zero(f"[{i}][{j}]", zt(e))
        return rep
    if d.verb == "jacobi":
        return rt.structure(args[0]).validity
    if d.verb == "contact":
        return rt.structure(args[0]).validity
    if d.verb == "lcs":
        return rt.structure(args[0]).validity
    if d.verb == "reeb":
        c = rt.structure(args[0])
        rep = CheckReport(f"reeb {args[0]}")
        expected = d.fields.get("equals")
        if expected:
            comps = [rt.scalar([t.strip()], chart) for t in
                     _split_top(_expect_wrapped(" ".join(expected), "(", ")", d.line), ",", d.line)]
            resid = c.reeb - VectorField(chart, comps)
            for i, e in enumerate(resid.components):
                rep.require_zero(f"R[{i}]", zt(e))
        return rep
    if d.verb == "hamiltonian":
        h = rt.scalar(args, chart)
        c = rt.structure(d.fields["on"][0])
        xh = contact_hamiltonian_vf(h, c)
        rep = CheckReport("hamiltonian field")
        expected = d.fields.get("equals")
        if expected:
            comps = [rt.scalar([t.strip()], chart) for t in
                     _split_top(_expect_wrapped(" ".join(expected), "(", ")", d.line), ",", d.line)]
            resid = xh - VectorField(chart, comps)
            for i, e in enumerate(resid.components):
                rep.require_zero(f"X_H[{i}]", zt(e))
        rep.data["X_H"] = [format_expr(e) for e in xh.components]
        return rep
    if d.verb == "dissipated":
        f = rt.scalar(args, chart)
        h = rt.scalar(d.fields["wrt"], chart)
        c = rt.structure(d.fields["on"][0])
        return is_dissipated(f, h, c, zt)
    if d.verb == "bracket":
        f = rt.get("scalar", args[0]) if args[0] in rt.values else rt.scalar([args[0]], chart)
        g = rt.get("scalar", args[1]) if args[1] in rt.values else rt.scalar([args[1]], chart)
        j = rt.structure(d.fields["on"][0])
        rep = CheckReport(f"bracket {args[0]} {args[1]}")
        val = jacobi_bracket(f, g, j)
        expected = rt.scalar(d.fields.get("equals", ["0"]), chart)
        rep.require_zero("bracket - expected", zt(val - expected))
        rep.data["value"] = format_expr(val)
        return rep
    if d.verb == "chain":
        h = rt.scalar(args, chart)
        ops = [rt.get("operator", a) for a in d.fields["with"]]
        basis = HaantjesBasis(ops, names=list(d.fields["with"]))
        chain = verify_chain(h, basis, zt)
        rep = CheckReport("chain")
        rep.status = chain.status
        for nm, cert in chain.closedness:
            rep.details.append((f"closed {nm}", cert))
        rep.data["rank"] = chain.rank
        pots = chain.potentials
        rep.data["potentials"] = [format_expr(p) if p is not None else None for p in pots]
        expected = d.fields.get("potentials")
        if expected:
            want = [rt.scalar([t.strip()], chart) for t in
                    _split_top(_expect_wrapped(" ".join(expected), "(", ")", d.line), ",", d.line)]
            for i, (got, w) in enumerate(zip(pots, want)):
                if got is None:
                    rep.reject(f"potential {i+1} unavailable")
                else:
                    rep.require_zero(f"H{i+1} - expected", zt(got - w))
        if chain.frobenius is not None:
            rep.merge(chain.frobenius)
        rep._update_certainty()
        return rep
    if d.verb == "ejh":
        ek = rt.get("extop", args[0])
        j = rt.structure(d.fields["on"][0])
        return check_ejh(ek, j, zt)
    if d.verb == "ext_chain":
        h = rt.scalar(args, chart)
        ops = [rt.get("extop", a) for a in d.fields["with"]]
        basis = ExtendedBasis(ops, names=list(d.fields["with"]))
        rep = verify_ext_chain(h, basis, zt)
        expected = d.fields.get("potentials")
        if expected:
            want = [rt.scalar([t.strip()], chart) for t in
                    _split_top(_expect_wrapped(" ".join(expected), "(", ")", d.line), ",", d.line)]
            for i, (got, w) in enumerate(zip(rep.data["potentials"], want)):
                rep.require_zero(f"H{i+1} - expected", zt(got - w))
        rep.data["potentials"] = [format_expr(p) for p in rep.data["potentials"]]
        return rep
    if d.verb == "thm_main":
        h = rt.scalar(args, chart)
        ops = [rt.get("extop", a) for a in d.fields["with"]]
        basis = ExtendedBasis(ops, names=list(d.fields["with"]))
        j = rt.structure(d.fields["on"][0])
        rep = thm_main_check(h, basis, j, zt)
        if "potentials" in rep.data:
            rep.data["potentials"] = [format_expr(p) for p in rep.data["potentials"]]
        return rep
    if d.verb == "lcsh":
        return check_lcsh(rt.get("operator", args[0]), rt.structure(d.fields["on"][0]), zt)
    if d.verb == "eta_ke":
        rep = eta_KE_check(rt.get("operator", args[0]), rt.structure(d.fields["on"][0]), zt)
        rep.data["eta(KE)"] = format_expr(rep.data["eta(KE)"])
        return rep
    if d.verb == "theorem9":
        h = rt.scalar(args, chart)
        ops = [rt.get("operator", a) for a in d.fields["with"]]
        basis = HaantjesBasis(ops, names=list(d.fields["with"]))
        rep = theorem9_check(h, basis, rt.structure(d.fields["on"][0]), zt)
        if "potentials" in rep.data:
            rep.data["potentials"] = [format_expr(p) for p in rep.data["potentials"]]
        return rep
    if d.verb == "techain":
        h = rt.scalar(args, chart)
        ops = [rt.get("operator", a) for a in d.fields["with"]]
        basis = HaantjesBasis(ops, names=list(d.fields["with"]))
        kind = d.fields["kind"][0]
        rep = techain_check(h, basis, rt.structure(d.fields["on"][0]), kind, zt)
        if "potentials" in rep.data:
            rep.data["potentials"] = [format_expr(p) for p in rep.data["potentials"]]
        return rep
    if d.verb == "jh":
        k = rt.get("operator", args[0])
        j = rt.structure(d.fields["on"][0])
        return check_jh_compatibility(k, j, zt=zt)
    if d.verb == "poissonize":
        j = rt.structure(args[0])
        pairs = []
        toks = d.fields.get("pairs")
        if toks:
            for chunk in toks:
                inner = _expect_wrapped(chunk, "(", ")", d.line)
                f_txt, g_txt = _split_top(inner, ",", d.line)
                pairs.append((rt.scalar([f_txt], rt.chart(d.chart_name)),
                              rt.scalar([g_txt], rt.chart(d.chart_name))))
        _, rep = poissonize(j, zt, test_pairs=pairs)
        return rep
    raise ValueError(f"unhandled directive {d.verb}")


# ---------------------------------------------------------------------------
# Canonical formatter


def format_model(model: Model) -> str:
    lines = []
    by_name = {d.name: d for d in model.declarations}
    for kind, key in model.order:
        if kind == "chart":
            chart = model.charts[key]
            coords = ", ".join(chart.coords)
            tail = "" if chart.kind[0] == "generic" else f" {chart.kind[0]} {chart.kind[1]}"
            lines.append(f"chart {key} ({coords}){tail}")
        elif kind == "decl":
            d = by_name[key]
            lines.append(_format_declaration(d, model.charts[d.chart_name]))
        else:
            d = model.directives[key]
            lines.append("check " + _format_directive(d))
    return "\n".join(lines) + "\n"


def _format_declaration(d: Declaration, chart: Chart) -> str:
    if d.kind == "scalar":
        return f"scalar {d.name} = {format_expr(d.payload['value'])}"
    if d.kind == "form":
        return f"form {d.name} = {_format_form(d.payload['value'])}"
    if d.kind == "vector":
        v = d.payload["value"]
        return f"vector {d.name} = ({', '.join(format_expr(e) for e in v.components)})"
    if d.kind == "bivector":
        return f"bivector {d.name} = {_format_bivector(d.payload['value'])}"
    if d.kind == "operator":
        k = d.payload["value"]
        rows = ", ".join("[" + ", ".join(format_expr(e) for e in row) + "]" for row in k.matrix)
        return f"operator {d.name} = [{rows}]"
    # extop / contact / lcs / jacobi keep their raw reference syntax
    return f"{d.kind} {d.name} = {d.payload['rhs']}"


_KEYWORD_ORDER = ["args", "wrt", "with", "on", "kind", "equals", "potentials", "pairs", "abelian"]


def _format_directive(d: Directive) -> str:
    parts = [d.verb]
    for key in _KEYWORD_ORDER:
        if key not in d.fields:
            continue
        if key != "args":
            parts.append(key)
        parts.extend(d.fields[key])
    if d.expect_fail:
        parts.extend(["expect", "fail"])
    return " ".join(parts)


def _format_form(f: KForm) -> str:
    chart = f.chart
    if f.is_zero():
        return f"0 * d({chart.coords[0]})"
    parts = []
    for idx, val in f.items():
        wedge_txt = " /\\ ".join(f"d({chart.coords[i]})" for i in idx)
        parts.append(f"({format_expr(val)}) * {wedge_txt}")
    return " + ".join(parts)


def _format_bivector(b: KVector) -> str:
    chart = b.chart
    parts = []
    for (i, j), val in b.items():
        ei = ", ".join("1" if a == i else "0" for a in range(chart.dim))
        ej = ", ".join("1" if a == j else "0" for a in range(chart.dim))
        parts.append(f"({format_expr(val)}) * ({ei}) /\\ ({ej})")
    return " + ".join(parts) if parts else "0 * (" + ", ".join("0" for _ in chart.coords) + ")"


# ---------------------------------------------------------------------------
# Entry point


def main(argv: Optional[list] = None) -> int:
    parser = argparse.ArgumentParser(prog="haantjes", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p_check = sub.add_parser("check", help="run a model's check directives")
    p_check.add_argument("model")
    p_check.add_argument("--seed", type=int, default=0)
    p_check.add_argument("--samples", type=int, default=16)
    p_check.add_argument("--tol", type=float, default=1e-9)
    p_check.add_argument("--json", dest="json_path")
    p_check.add_argument("--fail-fast", action="store_true")
    p_fmt = sub.add_parser("fmt", help="canonical pretty-print of a model")
    p_fmt.add_argument("model")
    args = parser.parse_args(argv)

    try:
        with open(args.model, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        model = parse_model(text)
    except ParseError as exc:
        print(f"{args.model}:{exc}", file=sys.stderr)
        return 2

    if args.command == "fmt":
        sys.stdout.write(format_model(model))
        return 0

    report = run_checks(model, seed=args.seed, samples=args.samples, tol=args.tol,
                        fail_fast=args.fail_fast)
    report.meta["model"] = args.model
    print(report.table())
    if args.json_path:
        with open(args.json_path, "w", encoding="utf-8") as fh:
            fh.write(report.full_json())
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
