"""Exact symbolic scalar expressions on a coordinate chart.

Everything in this package is built on one normal form: an expression is a
sum of terms, each term a rational coefficient times a monomial in "atoms".
Atoms are coordinates, named parameters, abstract-function symbols carrying
a multi-index of applied partial derivatives, exponentials of expressions,
and inverse powers of primitive multi-term expressions (there is no division
node; a quotient is a product with a negative integer power).

Canonicalisation is eager: every constructor and arithmetic operator returns
the normal form, so structural equality of the term tuples is semantic
equality for the exponential-free fragment, and zero-testing reduces to
inspection plus (for quotients) cross-multiplication plus (as a last resort)
seeded sampling.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

__all__ = [
    "BudgetError",
    "Chart",
    "ChartMismatch",
    "DomainError",
    "Expr",
    "ParseError",
    "SubstitutionError",
    "UnboundAtomError",
    "ZeroCertainty",
    "ZeroTester",
    "darboux_contact",
    "darboux_symplectic",
    "diff",
    "eval_numeric",
    "exp",
    "fn_symbol",
    "format_expr",
    "integrate_unit_param",
    "is_zero",
    "lcs_local",
    "param",
    "parse_scalar",
    "rational",
    "simplify",
    "weakest",
]

NODE_BUDGET = 10**6

Rat = Fraction
RatLike = Union[int, Fraction]


class ChartMismatch(ValueError):
    """Operands live on different charts."""


class BudgetError(RuntimeError):
    """A canonical form exceeded the node budget."""


class DomainError(ZeroDivisionError):
    """Inversion of an expression that is structurally zero."""


class SubstitutionError(ValueError):
    """A coordinate substitution hit an abstract-function dependency."""


class UnboundAtomError(KeyError):
    """Numeric evaluation met an atom with no binding."""


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


# ---------------------------------------------------------------------------
# Charts


_DARBOUX_KINDS = ("darboux-contact", "darboux-symplectic", "lcs-local")


@dataclass(frozen=True)
class Chart:
    """An ordered coordinate chart, optionally tagged with a Darboux kind.

    ``kind`` is ``("generic",)`` or ``(tag, n)`` with tag one of
    ``darboux-contact`` (dim 2n+1, coords ordered q..., p..., z),
    ``darboux-symplectic`` / ``lcs-local`` (dim 2n, coords q..., p...).
    """

    name: str
    coords: tuple[str, ...]
    kind: tuple = ("generic",)

    def __post_init__(self):
        if len(set(self.coords)) != len(self.coords):
            raise ValueError(f"chart {self.name}: duplicate coordinates")
        reserved = {"exp", "d"} & set(self.coords)
        if reserved:
            raise ValueError(f"chart {self.name}: reserved coordinate names {sorted(reserved)}")
        tag = self.kind[0]
        if tag == "generic":
            return
        if tag not in _DARBOUX_KINDS:
            raise ValueError(f"chart {self.name}: unknown kind {tag!r}")
        n = self.kind[1]
        want = 2 * n + 1 if tag == "darboux-contact" else 2 * n
        if len(self.coords) != want:
            raise ValueError(
                f"chart {self.name}: kind {tag}({n}) needs dim {want}, got {len(self.coords)}"
            )

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def n_pairs(self) -> int:
        if self.kind[0] == "generic":
            raise ValueError("generic chart has no (q, p) pairing")
        return self.kind[1]

    @property
    def q_indices(self) -> tuple[int, ...]:
        return tuple(range(self.n_pairs))

    @property
    def p_indices(self) -> tuple[int, ...]:
        n = self.n_pairs
        return tuple(range(n, 2 * n))

    @property
    def z_index(self) -> int:
        if self.kind[0] != "darboux-contact":
            raise ValueError("only contact charts have a z coordinate")
        return 2 * self.kind[1]

    def index(self, coord: str) -> int:
        try:
            return self.coords.index(coord)
        except ValueError:
            raise KeyError(f"chart {self.name} has no coordinate {coord!r}") from None

    def coord(self, which: Union[int, str]) -> "Expr":
        i = which if isinstance(which, int) else self.index(which)
        if not 0 <= i < self.dim:
            raise IndexError(f"coordinate index {i} out of range on {self.name}")
        return Expr(self, _t_atom(("c", i)))

    def zero(self) -> "Expr":
        return Expr(self, ())

    def one(self) -> "Expr":
        return Expr(self, _T_ONE)

    def const(self, value: RatLike) -> "Expr":
        return rational(self, value)

    def extended(self, extra: str = "t") -> "Chart":
        """Chart with one appended coordinate (used by Poissonization)."""
        if extra in self.coords:
            raise ValueError(f"coordinate {extra!r} already present")
        return Chart(self.name + "_x" + extra, self.coords + (extra,), ("generic",))

    def __repr__(self):
        return f"Chart({self.name}, {','.join(self.coords)})"


def darboux_contact(n: int, name: str = "M") -> Chart:
    qs = tuple(f"q{i+1}" for i in range(n)) if n > 1 else ("q",)
    ps = tuple(f"p{i+1}" for i in range(n)) if n > 1 else ("p",)
    return Chart(name, qs + ps + ("z",), ("darboux-contact", n))


def darboux_symplectic(n: int, name: str = "M", kind: str = "darboux-symplectic") -> Chart:
    qs = tuple(f"q{i+1}" for i in range(n)) if n > 1 else ("q",)
    ps = tuple(f"p{i+1}" for i in range(n)) if n > 1 else ("p",)
    return Chart(name, qs + ps, (kind, n))


def lcs_local(n: int, name: str = "M") -> Chart:
    return darboux_symplectic(n, name, "lcs-local")


# ---------------------------------------------------------------------------
# Canonical term algebra.
#
# atom: ("c", i) | ("p", name) | ("f", name, deps, parts) | ("e", terms)
#       | ("w", terms)
# mono: tuple of (atom, exp), sorted by atom key; exps nonzero; at most one
#       "e" atom and its exp is 1; "w" exps are negative.
# terms: tuple of (mono, Fraction), sorted by mono key; coeffs nonzero.

_T_ONE = (((), Fraction(1)),)

_ATOM_RANK = {"c": 0, "p": 1, "f": 2, "e": 3, "w": 4}


def _atom_key(a):
    tag = a[0]
    r = _ATOM_RANK[tag]
    if tag == "c":
        return (r, a[1])
    if tag == "p":
        return (r, a[1])
    if tag == "f":
        return (r, a[1], a[2], a[3])
    return (r, _terms_key(a[1]))


def _mono_key(m):
    return tuple((_atom_key(a), e) for a, e in m)


def _terms_key(t):
    return tuple((_mono_key(m), (c.numerator, c.denominator)) for m, c in t)


def _freeze(d: dict) -> tuple:
    items = [(m, c) for m, c in d.items() if c != 0]
    items.sort(key=lambda mc: _mono_key(mc[0]))
    return tuple(items)


def _t_atom(a, exp: int = 1) -> tuple:
    return ((((a, exp),), Fraction(1)),)


def _t_const(c: RatLike) -> tuple:
    c = Fraction(c)
    return () if c == 0 else (((), c),)


def _t_add(*ts) -> tuple:
    acc: dict = {}
    for t in ts:
        for m, c in t:
            acc[m] = acc.get(m, Fraction(0)) + c
    return _freeze(acc)


def _t_scale(t, c: RatLike) -> tuple:
    c = Fraction(c)
    if c == 0:
        return ()
    return tuple((m, k * c) for m, k in t)


def _t_neg(t) -> tuple:
    return tuple((m, -c) for m, c in t)


def _node_count(t) -> int:
    n = 0
    for m, _ in t:
        n += 1
        for a, _e in m:
            n += 1
            if a[0] in ("e", "w"):
                n += _node_count(a[1])
    return n


def _budget_check(t):
    # cheap guard first: only count nodes when the term count already hints
    # at trouble relative to the active budget
    if len(t) > NODE_BUDGET // 256 and _node_count(t) > NODE_BUDGET:
        raise BudgetError(f"canonical form exceeds {NODE_BUDGET} nodes")
    return t


def _mono_mul(m1, m2):
    """Multiply two monomials.

    Returns (mono, expand_list) where expand_list holds (terms, positive_exp)
    factors that must be multiplied out polynomially ("w" powers that turned
    nonnegative).
    """
    powers: dict = {}
    exp_args = []
    for a, e in list(m1) + list(m2):
        if a[0] == "e":
            exp_args.append(a[1])
            continue
        powers[a] = powers.get(a, 0) + e
    out = []
    expand = []
    for a, e in powers.items():
        if e == 0:
            continue
        if a[0] == "w" and e > 0:
            expand.append((a[1], e))
            continue
        out.append((a, e))
    if exp_args:
        u = _t_add(*exp_args)
        if u:
            out.append((("e", u), 1))
    out.sort(key=lambda ae: _atom_key(ae[0]))
    return tuple(out), expand


def _t_mul(t1, t2) -> tuple:
    if not t1 or not t2:
        return ()
    acc: dict = {}
    pending = []
    for m1, c1 in t1:
        for m2, c2 in t2:
            m, expand = _mono_mul(m1, m2)
            c = c1 * c2
            if expand:
                pending.append((m, c, expand))
            else:
                acc[m] = acc.get(m, Fraction(0)) + c
    out = _freeze(acc)
    for m, c, expand in pending:
        piece = ((m, c),)
        for base, e in expand:
            piece = _t_mul(piece, _t_pow(base, e))
        out = _t_add(out, piece)
    return _budget_check(out)


def _mono_pow(m, c: Fraction, k: int):
    out = []
    exp_arg = None
    for a, e in m:
        if a[0] == "e":
            exp_arg = _t_scale(a[1], k)
        else:
            out.append((a, e * k))
    if exp_arg:
        out.append((("e", exp_arg), 1))
    out.sort(key=lambda ae: _atom_key(ae[0]))
    return (tuple(out), c**k)


def _primitive(t):
    """Split t into (coeff, primitive_terms): content and sign extracted."""
    content = Fraction(0)
    for _, c in t:
        content = Fraction(
            math.gcd(content.numerator, c.numerator),
            math.lcm(content.denominator, c.denominator) if content else c.denominator,
        ) if content else abs(c)
        if content == 1:
            break
    lead = t[0][1]
    if lead < 0:
        content = -content
    return content, tuple((m, c / content) for m, c in t)


def _t_pow(t, k: int) -> tuple:
    if k == 0:
        return _T_ONE
    if not t:
        if k < 0:
            raise DomainError("inverse of zero expression")
        return ()
    if k > 0:
        result = _T_ONE
        base = t
        e = k
        while e:
            if e & 1:
                result = _t_mul(result, base)
            base = _t_mul(base, base) if e > 1 else base
            e >>= 1
        return result
    # negative power
    if len(t) == 1:
        # re-normalise through _t_mul: a "w" exponent may have turned positive
        return _t_mul((_mono_pow(t[0][0], t[0][1], k),), _T_ONE)
    content, base = _primitive(t)
    return ((((("w", base), k),), content**k),)


def _t_exp(t) -> tuple:
    if not t:
        return _T_ONE
    return _t_atom(("e", t))


def _t_diff(t, i: int) -> tuple:
    pieces = []
    for m, c in t:
        for pos, (a, e) in enumerate(m):
            da = _atom_diff(a, i)
            if da is None:
                continue
            rest = list(m)
            tag = a[0]
            if tag == "e":
                pass  # d(exp u) = exp(u) du: atom stays
            elif e == 1:
                del rest[pos]
            else:
                rest[pos] = (a, e - 1)
            piece = ((tuple(rest), c * (e if tag != "e" else 1)),)
            pieces.append(_t_mul(piece, da))
    return _t_add(*pieces) if pieces else ()


def _atom_diff(a, i: int):
    tag = a[0]
    if tag == "c":
        return _T_ONE if a[1] == i else None
    if tag == "p":
        return None
    if tag == "f":
        _, name, deps, parts = a
        if i not in deps:
            return None
        return _t_atom(("f", name, deps, tuple(sorted(parts + (i,)))))
    if tag == "e":
        d = _t_diff(a[1], i)
        return d or None
    # "w": d(B^e) is handled by the caller through the exponent; here we only
    # supply dB, the caller multiplied by e and lowered the exponent.
    d = _t_diff(a[1], i)
    return d or None


def _t_subst(t, mapping: dict) -> tuple:
    out = ()
    for m, c in t:
        piece = _t_const(c)
        for a, e in m:
            tag = a[0]
            if tag == "c":
                repl = mapping.get(a[1])
                fac = repl if repl is not None else _t_atom(a)
                piece = _t_mul(piece, _t_pow(fac, e) if e != 1 else fac)
            elif tag == "p":
                piece = _t_mul(piece, _t_atom(a, e))
            elif tag == "f":
                if any(j in mapping for j in a[2]):
                    raise SubstitutionError(
                        f"cannot substitute inside abstract function {a[1]!r}"
                    )
                piece = _t_mul(piece, _t_atom(a, e))
            elif tag == "e":
                piece = _t_mul(piece, _t_exp(_t_subst(a[1], mapping)))
            else:
                piece = _t_mul(piece, _t_pow(_t_subst(a[1], mapping), e))
        out = _t_add(out, piece)
    return out


def _collect_atoms(t, into: set):
    for m, _ in t:
        for a, _e in m:
            if a[0] in ("e", "w"):
                _collect_atoms(a[1], into)
            else:
                into.add(a)


def _has_exp(t) -> bool:
    for m, _ in t:
        for a, _e in m:
            if a[0] == "e":
                return True
            if a[0] == "w" and _has_exp(a[1]):
                return True
    return False


def _clear_denominators(t) -> tuple:
    """Multiply through by positive powers of every top-level "w" base.

    Each term sheds its inverse-power atoms and picks up the complementary
    expanded polynomial factor, so equal ratios cancel structurally.
    Preserves zero-ness on the dense open set where denominators do not
    vanish; used only for zero-testing.
    """
    for _ in range(8):
        need: dict = {}
        for m, _c in t:
            for a, e in m:
                if a[0] == "w":
                    need[a[1]] = max(need.get(a[1], 0), -e)
        if not need:
            return t
        out = ()
        for m, c in t:
            have = {base: 0 for base in need}
            rest = []
            for a, e in m:
                if a[0] == "w" and a[1] in have:
                    have[a[1]] += e
                else:
                    rest.append((a, e))
            piece = ((tuple(rest), c),)
            for base, top in need.items():
                k = top + have[base]
                if k > 0:
                    piece = _t_mul(piece, _t_pow(base, k))
            out = _t_add(out, piece)
        t = out
        if not t:
            return t
    return t


# ---------------------------------------------------------------------------
# Expr


class Expr:
    """Immutable canonical scalar expression on a chart."""

    __slots__ = ("chart", "terms")

    def __init__(self, chart: Chart, terms: tuple):
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "terms", terms)

    def __setattr__(self, *_):
        raise AttributeError("Expr is immutable")

    # -- housekeeping

    def _coerce(self, other) -> "Expr":
        if isinstance(other, Expr):
            if other.chart != self.chart:
                raise ChartMismatch(f"{self.chart.name} vs {other.chart.name}")
            return other
        if isinstance(other, (int, Fraction)):
            return Expr(self.chart, _t_const(other))
        return NotImplemented

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.terms == _t_const(other)
        return (
            isinstance(other, Expr)
            and self.chart == other.chart
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.chart.name, _terms_key(self.terms)))

    # -- arithmetic

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Expr(self.chart, _t_add(self.terms, o.terms))

    __radd__ = __add__

    def __neg__(self):
        return Expr(self.chart, _t_neg(self.terms))

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Expr(self.chart, _t_add(self.terms, _t_neg(o.terms)))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Expr(self.chart, _t_mul(self.terms, o.terms))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise TypeError("only integer powers are representable")
        return Expr(self.chart, _t_pow(self.terms, k))

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o**-1

    def __rtruediv__(self, other):
        return self._coerce(other) * self**-1

    # -- queries

    def is_zero_expr(self) -> bool:
        return not self.terms

    def is_one(self) -> bool:
        return self.terms == _T_ONE

    def as_rational(self) -> Optional[Fraction]:
        if not self.terms:
            return Fraction(0)
        if len(self.terms) == 1 and self.terms[0][0] == ():
            return self.terms[0][1]
        return None

    def has_exp(self) -> bool:
        return _has_exp(self.terms)

    def is_polynomial(self) -> bool:
        """No exp atoms, no inverse powers, no negative coordinate powers."""
        for m, _ in self.terms:
            for a, e in m:
                if a[0] in ("e", "w") or e < 0:
                    return False
        return True

    def atoms(self) -> set:
        out: set = set()
        _collect_atoms(self.terms, out)
        return out

    def depends_on(self, i: int) -> bool:
        return not self.diff(i).is_zero_expr()

    # -- calculus

    def diff(self, which: Union[int, str]) -> "Expr":
        i = which if isinstance(which, int) else self.chart.index(which)
        if not 0 <= i < self.chart.dim:
            raise IndexError(f"coordinate index {i} out of range")
        return Expr(self.chart, _t_diff(self.terms, i))

    def subst(self, mapping: Mapping[Union[int, str], "Expr"]) -> "Expr":
        m = {}
        for k, v in mapping.items():
            i = k if isinstance(k, int) else self.chart.index(k)
            m[i] = v.terms if isinstance(v, Expr) else _t_const(v)
        return Expr(self.chart, _t_subst(self.terms, m))

    def on_chart(self, chart: Chart) -> "Expr":
        """Reinterpret on a chart whose coordinates extend this one's."""
        if chart.coords[: self.chart.dim] != self.chart.coords:
            raise ChartMismatch("target chart does not extend source chart")
        return Expr(chart, self.terms)

    def __repr__(self):
        return f"<{format_expr(self)}>"

    def __str__(self):
        return format_expr(self)


def rational(chart: Chart, value: RatLike) -> Expr:
    return Expr(chart, _t_const(value))


def param(chart: Chart, name: str) -> Expr:
    return Expr(chart, _t_atom(("p", name)))


def fn_symbol(
    chart: Chart,
    name: str,
    deps: Optional[Sequence[Union[int, str]]] = None,
    parts: Sequence[int] = (),
) -> Expr:
    """Abstract function symbol evaluated at the chart point.

    ``deps`` restricts the coordinates the symbol may depend on (defaults to
    all of them); partial derivatives in other directions vanish.
    """
    if deps is None:
        dep_idx = tuple(range(chart.dim))
    else:
        dep_idx = tuple(sorted(d if isinstance(d, int) else chart.index(d) for d in deps))
    for p in parts:
        if p not in dep_idx:
            raise ValueError(f"partial in non-dependency direction {p}")
    return Expr(chart, _t_atom(("f", name, dep_idx, tuple(sorted(parts)))))


def exp(e: Expr) -> Expr:
    return Expr(e.chart, _t_exp(e.terms))


def simplify(e: Expr) -> Expr:
    """Expressions are kept canonical eagerly; simplify is the identity map
    on canonical forms and exists as the public name of that contract."""
    return Expr(e.chart, _t_add(e.terms))


def diff(e: Expr, which: Union[int, str]) -> Expr:
    return e.diff(which)


# ---------------------------------------------------------------------------
# Printing (stable, used by reports and the model formatter)


def _format_atom(chart: Chart, a) -> str:
    tag = a[0]
    if tag == "c":
        return chart.coords[a[1]]
    if tag == "p":
        return a[1]
    if tag == "f":
        _, name, deps, parts = a
        args = ",".join(chart.coords[d] for d in deps)
        if parts:
            suffix = "_" + "".join(chart.coords[p] for p in parts)
        else:
            suffix = ""
        return f"{name}{suffix}({args})"
    if tag == "e":
        return f"exp({_format_terms(chart, a[1])})"
    return f"({_format_terms(chart, a[1])})"


def _format_mono(chart: Chart, m, c: Fraction) -> str:
    factors = []
    if c == -1 and m:
        sign = "-"
    else:
        sign = ""
        if c != 1 or not m:
            factors.append(str(c))
    for a, e in m:
        s = _format_atom(chart, a)
        if a[0] == "w":
            factors.append(f"{s}^{e}")
        elif e == 1:
            factors.append(s)
        else:
            need_parens = a[0] in ("e", "f")
            factors.append(f"({s})^{e}" if need_parens else f"{s}^{e}")
    return sign + "*".join(factors)


def _format_terms(chart: Chart, t) -> str:
    if not t:
        return "0"
    out = []
    for i, (m, c) in enumerate(t):
        if i and c > 0:
            out.append(" + " + _format_mono(chart, m, c))
        elif i:
            out.append(" - " + _format_mono(chart, m, -c))
        else:
            out.append(_format_mono(chart, m, c))
    return "".join(out)


def format_expr(e: Expr) -> str:
    return _format_terms(e.chart, e.terms)


# ---------------------------------------------------------------------------
# Zero certification


@dataclass(frozen=True)
class ZeroCertainty:
    """Outcome of a zero test.

    tag is one of ``proven_zero``, ``proven_nonzero``, ``probably_zero``,
    ``unknown``.  Proven tags arise only from exact canonicalisation or exact
    rational evaluation; ``probably_zero`` only from seeded sampling.
    """

    tag: str
    witness: Optional[dict] = None
    samples: int = 0
    tol: float = 0.0
    note: str = ""

    @property
    def is_proven_zero(self) -> bool:
        return self.tag == "proven_zero"

    @property
    def accepts_zero(self) -> bool:
        return self.tag in ("proven_zero", "probably_zero")

    @property
    def rejects_zero(self) -> bool:
        return self.tag == "proven_nonzero" or self.note == "numeric-nonzero"

    def __str__(self):
        extra = ""
        if self.witness is not None:
            items = sorted(self.witness.items())
            extra = " at {" + ", ".join(f"{k}={v}" for k, v in items) + "}"
        if self.tag == "probably_zero":
            extra = f" ({self.samples} samples, tol {self.tol})"
        return self.tag + extra + (f" [{self.note}]" if self.note else "")


PROVEN_ZERO = ZeroCertainty("proven_zero")

_CERTAINTY_ORDER = {"proven_zero": 3, "probably_zero": 2, "unknown": 1, "proven_nonzero": 0}


def weakest(certs: Iterable[ZeroCertainty]) -> ZeroCertainty:
    certs = list(certs)
    if not certs:
        return PROVEN_ZERO
    return min(certs, key=lambda c: _CERTAINTY_ORDER[c.tag])


def _atom_label(chart: Chart, a) -> str:
    return _format_atom(chart, a)


def _sample_fractions(rng: random.Random, atoms, nice_first: bool, k: int):
    """Yield up to k assignments atom -> Fraction, origin first if asked."""
    atoms = sorted(atoms, key=_atom_key)
    produced = 0
    if nice_first and produced < k:
        yield {a: Fraction(0) for a in atoms}
        produced += 1
    while produced < k:
        yield {a: Fraction(rng.randint(-20, 20), 7) for a in atoms}
        produced += 1


def _eval_exact(t, assign) -> tuple:
    """Return (defined, exact, value). value is a Fraction when exact."""
    total = Fraction(0)
    inexact = False
    for m, c in t:
        val = c
        term_inexact = False
        for a, e in m:
            tag = a[0]
            if tag in ("c", "p", "f"):
                v = assign[a]
            elif tag == "e":
                d, x, u = _eval_exact(a[1], assign)
                if not d:
                    return (False, False, None)
                if x and u == 0:
                    v = Fraction(1)
                else:
                    term_inexact = True
                    continue
            else:
                d, x, u = _eval_exact(a[1], assign)
                if not d or not x:
                    return (False, False, None) if not d else (True, False, None)
                if u == 0:
                    return (False, False, None)
                v = u**e
                e = 1
            if v == 0 and e < 0:
                return (False, False, None)
            val *= v**e if e != 1 else v
        if term_inexact:
            if val != 0:
                inexact = True
            continue
        total += val
    if inexact:
        return (True, False, None)
    return (True, True, total)


def _eval_float(t, assign) -> float:
    total = 0.0
    for m, c in t:
        val = float(c)
        for a, e in m:
            tag = a[0]
            if tag in ("c", "p", "f"):
                v = assign[a]
            elif tag == "e":
                v = math.exp(_eval_float(a[1], assign))
            else:
                v = _eval_float(a[1], assign)
            if v == 0 and e < 0:
                raise ZeroDivisionError
            val *= v**e
        total += val
    return total


def _exp_groups(t):
    """Group terms by their exponential atom's argument (None = exp-free)."""
    groups: dict = {}
    for m, c in t:
        arg = None
        rest = []
        for a, e in m:
            if a[0] == "e":
                arg = a[1]
            else:
                rest.append((a, e))
        key = _terms_key(arg) if arg is not None else None
        groups.setdefault(key, []).append((tuple(rest), c))
    return [tuple(v) for v in groups.values()]


def is_zero(e: Expr, seed: int = 0, samples: int = 16, tol: float = 1e-9) -> ZeroCertainty:
    """Decide whether e vanishes identically.

    Exact canonicalisation (after clearing inverse-power denominators)
    settles the rational fragment; a nonzero exponential-free form is then
    certified nonzero by exact rational evaluation at seeded sample points.
    Exponential parts fall back to grouped exact reasoning and, last, to
    float sampling which can only ever report ``probably_zero``.
    """
    t = e.terms
    if not t:
        return PROVEN_ZERO
    t = _clear_denominators(t)
    if not t:
        return PROVEN_ZERO
    chart = e.chart
    rng = random.Random(seed)
    if not _has_exp(t):
        for assign in _sample_fractions(rng, _iter_atoms(t), True, samples):
            defined, exact, val = _eval_exact(t, assign)
            if defined and exact and val != 0:
                return ZeroCertainty(
                    "proven_nonzero",
                    witness={_atom_label(chart, a): v for a, v in assign.items()},
                )
        return ZeroCertainty("unknown", note="no nonzero sample found")
    # exponential case: split into exp-argument groups; if some group's
    # polynomial part is exp-free and provably nonzero, the whole sum cannot
    # vanish (distinct canonical exp arguments are multiplicatively
    # independent over the rational-coefficient polynomial ring).
    groups = _exp_groups(t)
    if all(not _has_exp(g) for g in groups):
        for g in groups:
            sub = is_zero(Expr(chart, _t_add(g)), seed=seed, samples=samples, tol=tol)
            if sub.tag == "proven_nonzero":
                return ZeroCertainty("proven_nonzero", witness=sub.witness,
                                     note="nonvanishing exponential group")
    atoms = _iter_atoms(t)
    defined = 0
    worst = 0.0
    worst_assign = None
    for assign in _sample_fractions(rng, atoms, True, samples):
        fassign = {a: float(v) for a, v in assign.items()}
        try:
            val = _eval_float(t, fassign)
        except (ZeroDivisionError, OverflowError):
            continue
        defined += 1
        if abs(val) > worst:
            worst = abs(val)
            worst_assign = assign
    if defined == 0:
        return ZeroCertainty("unknown", note="evaluation undefined at all samples")
    if worst < tol:
        return ZeroCertainty("probably_zero", samples=defined, tol=tol)
    return ZeroCertainty(
        "unknown",
        witness={_atom_label(chart, a): v for a, v in worst_assign.items()},
        note="numeric-nonzero",
    )


def _iter_atoms(t):
    out: set = set()
    _collect_atoms(t, out)
    return out


@dataclass(frozen=True)
class ZeroTester:
    """A seeded zero test; every probabilistic check threads one of these."""

    seed: int = 0
    samples: int = 16
    tol: float = 1e-9

    def __call__(self, e: Expr) -> ZeroCertainty:
        return is_zero(e, seed=self.seed, samples=self.samples, tol=self.tol)

    def fork(self, salt: int) -> "ZeroTester":
        return ZeroTester(self.seed * 1000003 + salt, self.samples, self.tol)


def integrate_unit_param(e: Expr, name: str) -> Expr:
    """Exact integral over [0, 1] of e in the parameter ``name``.

    e must be polynomial in the parameter (the radial-integration use case).
    """
    key = ("p", name)
    out = ()
    for m, c in e.terms:
        k = 0
        rest = []
        for a, ex in m:
            if a == key:
                if ex < 0:
                    raise DomainError(f"negative power of parameter {name!r}")
                k = ex
            else:
                if a[0] in ("e", "w") and key in _iter_atoms(((((a, 1),), Fraction(1)),)):
                    raise DomainError(f"parameter {name!r} inside nonpolynomial atom")
                rest.append((a, ex))
        out = _t_add(out, ((tuple(rest), c / (k + 1)),))
    return Expr(e.chart, out)


# ---------------------------------------------------------------------------
# Numeric evaluation


def eval_numeric(
    e: Expr,
    point: Mapping[str, float],
    params: Optional[Mapping[str, float]] = None,
    fn_bindings: Optional[Mapping[str, Expr]] = None,
) -> float:
    """IEEE-double value of e at a chart point.

    Abstract function symbols must be bound (by name) to concrete Expr
    instantiations; their partial-derivative atoms evaluate by exact
    differentiation of the binding followed by numeric evaluation.
    """
    params = params or {}
    fn_bindings = fn_bindings or {}
    chart = e.chart
    assign = {}
    for a in e.atoms():
        tag = a[0]
        if tag == "c":
            name = chart.coords[a[1]]
            if name not in point:
                raise UnboundAtomError(f"coordinate {name!r} unbound")
            assign[a] = float(point[name])
        elif tag == "p":
            if a[1] not in params:
                raise UnboundAtomError(f"parameter {a[1]!r} unbound")
            assign[a] = float(params[a[1]])
        else:
            _, name, _deps, parts = a
            if name not in fn_bindings:
                raise UnboundAtomError(f"abstract function {name!r} unbound")
            inst = fn_bindings[name]
            for p in parts:
                inst = inst.diff(p)
            assign[a] = eval_numeric(inst, point, params, fn_bindings)
    return _eval_float(e.terms, assign)


# ---------------------------------------------------------------------------
# Expression text parser (infix +, -, *, /, ^, exp(...), f(x1,...,xn))


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1
        self.tokens: list[tuple] = []
        self._lex()
        self.i = 0

    def _advance(self, n: int):
        for ch in self.text[self.pos : self.pos + n]:
            if ch == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
        self.pos += n

    def _lex(self):
        text = self.text
        while self.pos < len(text):
            ch = text[self.pos]
            if ch in " \t\r\n":
                self._advance(1)
                continue
            line, col = self.line, self.col
            if ch.isdigit():
                j = self.pos
                while j < len(text) and text[j].isdigit():
                    j += 1
                self.tokens.append(("int", int(text[self.pos : j]), line, col))
                self._advance(j - self.pos)
                continue
            if ch.isalpha() or ch == "_":
                j = self.pos
                while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                self.tokens.append(("ident", text[self.pos : j], line, col))
                self._advance(j - self.pos)
                continue
            if ch in "+-*/^(),":
                self.tokens.append((ch, ch, line, col))
                self._advance(1)
                continue
            raise ParseError(f"unexpected character {ch!r}", line, col)
        self.tokens.append(("eof", None, self.line, self.col))

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str):
        tok = self.next()
        if tok[0] != kind:
            raise ParseError(f"expected {kind!r}, found {tok[1]!r}", tok[2], tok[3])
        return tok


def parse_scalar(
    text: str,
    chart: Chart,
    names: Optional[Mapping[str, Expr]] = None,
) -> Expr:
    """Parse the scalar expression syntax.

    Bare identifiers resolve to chart coordinates, then to ``names`` entries,
    then to parameters; ``f(x1,...,xn)`` builds an abstract function symbol
    depending on the listed coordinates.
    """
    lx = _Lexer(text)
    e = _parse_sum(lx, chart, names or {})
    tok = lx.peek()
    if tok[0] != "eof":
        raise ParseError(f"trailing input {tok[1]!r}", tok[2], tok[3])
    return e


def _parse_sum(lx, chart, names) -> Expr:
    e = _parse_product(lx, chart, names)
    while lx.peek()[0] in ("+", "-"):
        op = lx.next()[0]
        rhs = _parse_product(lx, chart, names)
        e = e + rhs if op == "+" else e - rhs
    return e


def _parse_product(lx, chart, names) -> Expr:
    e = _parse_unary(lx, chart, names)
    while lx.peek()[0] in ("*", "/"):
        op = lx.next()[0]
        rhs = _parse_unary(lx, chart, names)
        e = e * rhs if op == "*" else e / rhs
    return e


def _parse_unary(lx, chart, names) -> Expr:
    tok = lx.peek()
    if tok[0] == "-":
        lx.next()
        return -_parse_unary(lx, chart, names)
    if tok[0] == "+":
        lx.next()
        return _parse_unary(lx, chart, names)
    return _parse_power(lx, chart, names)


def _parse_power(lx, chart, names) -> Expr:
    base = _parse_primary(lx, chart, names)
    if lx.peek()[0] != "^":
        return base
    lx.next()
    # exponent: optionally signed integer, possibly parenthesised
    neg = False
    tok = lx.peek()
    parens = tok[0] == "("
    if parens:
        lx.next()
        tok = lx.peek()
    if tok[0] == "-":
        lx.next()
        neg = True
        tok = lx.peek()
    tok = lx.expect("int")
    if parens:
        lx.expect(")")
    k = -tok[1] if neg else tok[1]
    return base**k


def _parse_primary(lx, chart, names) -> Expr:
    tok = lx.next()
    kind = tok[0]
    if kind == "int":
        return rational(chart, tok[1])
    if kind == "(":
        e = _parse_sum(lx, chart, names)
        lx.expect(")")
        return e
    if kind == "ident":
        name = tok[1]
        if name == "exp" and lx.peek()[0] == "(":
            lx.next()
            arg = _parse_sum(lx, chart, names)
            lx.expect(")")
            return exp(arg)
        if lx.peek()[0] == "(":
            lx.next()
            args = []
            if lx.peek()[0] != ")":
                while True:
                    a = lx.next()
                    if a[0] != "ident":
                        raise ParseError("abstract function arguments must be coordinates", a[2], a[3])
                    args.append(a[1])
                    if lx.peek()[0] == ",":
                        lx.next()
                        continue
                    break
            lx.expect(")")
            try:
                deps = [chart.index(a) for a in args]
            except KeyError as exc:
                raise ParseError(str(exc), tok[2], tok[3]) from None
            return fn_symbol(chart, name, deps)
        if name in chart.coords:
            return chart.coord(name)
        if name in names:
            return names[name]
        return param(chart, name)
    if kind == "eof":
        raise ParseError("unexpected end of input", tok[2], tok[3])
    raise ParseError(f"unexpected token {tok[1]!r}", tok[2], tok[3])
