"""
Heisenberg-picture polynomial algebra for gates and corrections.

Every gate is represented by its action ``x -> U^dag x U`` on the canonical
operators, written as commuting polynomials in the phase-space variables
``q0, p0, q1, p1`` and any number of symbolic parameters (``"Q"``, ``"T"``,
...).  Coefficients are :class:`fractions.Fraction`, so words built from
rational (or float, converted exactly) parameters are compared exactly.
Squeeze and rotation coefficients are transcendental; maps that contain them
are compared with a ``1e-12`` tolerance.

Words are lists of :class:`Op` in the order they act on the state (first
element acts first).
"""

from dataclasses import dataclass, field
from fractions import Fraction
import math
import numbers
import re

import numpy as np

MAX_DEGREE = 6
INEXACT_TOL = 1e-12
OP_KINDS = ("X", "Z", "U2", "U3", "F", "Finv", "CZ", "Squeeze", "Rotate", "phase")
GAUSSIAN_KINDS = ("X", "Z", "U2", "F", "Finv", "CZ", "Squeeze", "Rotate", "phase")

_PHASE_VAR = re.compile(r"^[qp]\d+$")


class AlgebraError(ValueError):
    """A word has no well-defined polynomial Heisenberg action in this engine."""


def _is_phase_var(name):
    return bool(_PHASE_VAR.match(name))


def _conj_partner(name):
    return ("p" if name[0] == "q" else "q") + name[1:]


def _coeff(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, numbers.Integral):
        return Fraction(int(x))
    if isinstance(x, numbers.Real):
        x = float(x)
        if not math.isfinite(x):
            raise ValueError("non-finite coefficient")
        return Fraction(x)
    raise TypeError(f"cannot use {x!r} as a polynomial coefficient")


class Poly:
    """Commutative polynomial with :class:`Fraction` coefficients.

    Monomials are sorted tuples of ``(variable, exponent)`` pairs; the empty
    tuple is the constant term.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        clean = {}
        for mono, c in (terms or {}).items():
            c = _coeff(c)
            if c != 0:
                clean[mono] = clean.get(mono, 0) + c
        self.terms = {m: c for m, c in clean.items() if c != 0}

    @classmethod
    def const(cls, c):
        return cls({(): c})

    @classmethod
    def var(cls, name):
        return cls({((name, 1),): 1})

    @classmethod
    def coerce(cls, x):
        if isinstance(x, Poly):
            return x
        if isinstance(x, str):
            return cls.var(x)
        return cls.const(x)

    # arithmetic
    def __add__(self, other):
        other = Poly.coerce(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return Poly(out)

    __radd__ = __add__

    def __neg__(self):
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-Poly.coerce(other))

    def __rsub__(self, other):
        return Poly.coerce(other) - self

    def __mul__(self, other):
        other = Poly.coerce(other)
        out = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, 0) + c1 * c2
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers")
        out = Poly.const(1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        try:
            other = Poly.coerce(other)
        except TypeError:
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    # inspection
    def variables(self):
        return {v for m in self.terms for v, _ in m}

    def phase_vars(self):
        return {v for v in self.variables() if _is_phase_var(v)}

    def phase_degree(self):
        return max((sum(e for v, e in m if _is_phase_var(v)) for m in self.terms), default=0)

    def coefficient(self, mono):
        return self.terms.get(tuple(sorted(mono)), Fraction(0))

    def split_phase(self):
        """Group terms by their phase-space monomial; values are parameter polynomials."""
        out = {}
        for m, c in self.terms.items():
            ph = tuple((v, e) for v, e in m if _is_phase_var(v))
            rest = tuple((v, e) for v, e in m if not _is_phase_var(v))
            out.setdefault(ph, {})[rest] = c
        return {ph: Poly(t) for ph, t in out.items()}

    def is_close(self, other, tol=0.0):
        diff = self - Poly.coerce(other)
        if tol == 0:
            return not diff.terms
        return all(abs(float(c)) <= tol for c in diff.terms.values())

    def derivative(self, var):
        out = {}
        for m, c in self.terms.items():
            d = dict(m)
            e = d.get(var, 0)
            if e == 0:
                continue
            if e == 1:
                del d[var]
            else:
                d[var] = e - 1
            mono = tuple(sorted(d.items()))
            out[mono] = out.get(mono, 0) + c * e
        return Poly(out)

    def subs(self, mapping):
        """Substitute variables by polynomials (commutative substitution)."""
        mapping = {k: Poly.coerce(v) for k, v in mapping.items()}
        out = Poly()
        for m, c in self.terms.items():
            term = Poly.const(c)
            for v, e in m:
                term = term * (mapping[v] ** e if v in mapping else Poly({((v, e),): 1}))
            out = out + term
        return out

    def evaluate(self, values):
        total = 0.0
        for m, c in self.terms.items():
            t = float(c)
            for v, e in m:
                t *= values[v] ** e
            total += t
        return total

    def __repr__(self):
        return f"Poly({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for m, c in sorted(self.terms.items(), key=lambda kv: (-sum(e for _, e in kv[0]), kv[0])):
            mono = "*".join(v if e == 1 else f"{v}^{e}" for v, e in m)
            cs = str(c) if c.denominator < 10**6 else f"{float(c):.12g}"
            if not mono:
                parts.append(cs)
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{cs}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")


def _mono_mul(m1, m2):
    d = dict(m1)
    for v, e in m2:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items()))


def poisson_bracket(f, g, n_modes):
    out = Poly()
    for i in range(n_modes):
        q, p = f"q{i}", f"p{i}"
        out = out + f.derivative(q) * g.derivative(p) - f.derivative(p) * g.derivative(q)
    return out


# -- gate words --------------------------------------------------------------


@dataclass(frozen=True)
class Op:
    """One element of a gate word.

    ``params`` entries may be numbers, parameter names (``"Q"``) or
    :class:`Poly` expressions.  ``Squeeze`` and ``Rotate`` need numeric
    parameters.  ``CZ`` defaults to unit coupling.
    """

    kind: str
    params: tuple = ()
    modes: tuple = (0,)

    def __post_init__(self):
        if self.kind not in OP_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        modes = (self.modes,) if isinstance(self.modes, (int, np.integer)) else tuple(self.modes)
        if self.kind == "CZ" and len(modes) == 1:
            modes = (0, 1)
        want = 2 if self.kind == "CZ" else 1
        if len(modes) != want or len(set(modes)) != want:
            raise ValueError(f"{self.kind} acts on {want} distinct mode(s)")
        object.__setattr__(self, "modes", tuple(int(m) for m in modes))
        params = tuple(self.params) if isinstance(self.params, (tuple, list)) else (self.params,)
        object.__setattr__(self, "params", params)

    def param(self, i=0, default=None):
        if len(self.params) > i:
            return Poly.coerce(self.params[i])
        if default is None:
            raise ValueError(f"{self.kind} needs a parameter")
        return Poly.coerce(default)

    def inverse(self):
        if self.kind == "F":
            return Op("Finv", (), self.modes)
        if self.kind == "Finv":
            return Op("F", (), self.modes)
        if self.kind == "CZ":
            return Op("CZ", (-self.param(0, 1),), self.modes)
        return Op(self.kind, (-self.param(0),), self.modes)

    def numeric_params(self):
        vals = []
        for p in self.params:
            p = Poly.coerce(p)
            if p.variables():
                raise AlgebraError(f"{self.kind} parameter {p} is symbolic")
            vals.append(float(p.coefficient(())))
        return tuple(vals)

    def __str__(self):
        args = ", ".join(str(Poly.coerce(p)) for p in self.params)
        sub = "".join(str(m) for m in self.modes)
        return f"{self.kind}_{sub}({args})"


def X(a, mode=0):
    return Op("X", (a,), (mode,))


def Z(b, mode=0):
    return Op("Z", (b,), (mode,))


def U2(t, mode=0):
    return Op("U2", (t,), (mode,))


def U3(t, mode=0):
    return Op("U3", (t,), (mode,))


def Fourier(mode=0):
    return Op("F", (), (mode,))


def CZ(g=1, modes=(0, 1)):
    return Op("CZ", (g,), modes)


def word_to_str(word):
    return " . ".join(str(op) for op in word) if word else "I"


def word_n_modes(word):
    return max((m for op in word for m in op.modes), default=0) + 1


# -- Heisenberg maps ---------------------------------------------------------


@dataclass(frozen=True)
class PolyMap:
    """Images of ``q_i, p_i`` under conjugation by a unitary.

    ``exact`` is False when transcendental coefficients (squeeze/rotation)
    are involved; equality is then tested to :data:`INEXACT_TOL`.
    """

    images: dict
    n_modes: int
    exact: bool = field(default=True)

    @classmethod
    def identity(cls, n_modes=1):
        return cls({v: Poly.var(v) for i in range(n_modes) for v in (f"q{i}", f"p{i}")}, n_modes)

    def __getitem__(self, name):
        return self.images[name]

    def then(self, gate_map):
        """Map of ``gate`` applied after ``self``: gate images evaluated at our images."""
        n = max(self.n_modes, gate_map.n_modes)
        cur = self.extended(n).images
        new = {}
        for v in cur:
            img = gate_map.images.get(v)
            new[v] = cur[v] if img is None else _ordered_subs(img, cur)
            if new[v].phase_degree() > MAX_DEGREE:
                raise AlgebraError(f"image of {v} exceeds degree cap {MAX_DEGREE}")
        return PolyMap(new, n, self.exact and gate_map.exact)

    def extended(self, n_modes):
        if n_modes <= self.n_modes:
            return self
        imgs = dict(self.images)
        for i in range(self.n_modes, n_modes):
            imgs[f"q{i}"] = Poly.var(f"q{i}")
            imgs[f"p{i}"] = Poly.var(f"p{i}")
        return PolyMap(imgs, n_modes, self.exact)

    def difference(self, other):
        n = max(self.n_modes, other.n_modes)
        a, b = self.extended(n).images, other.extended(n).images
        return {v: a[v] - b[v] for v in a}

    def equals(self, other, tol=None):
        if tol is None:
            tol = 0.0 if (self.exact and other.exact) else INEXACT_TOL
        return all(d.is_close(0, tol) for d in self.difference(other).values())

    def brackets_ok(self, tol=None):
        """Check canonical Poisson brackets of all image pairs."""
        if tol is None:
            tol = 0.0 if self.exact else INEXACT_TOL
        names = [f"{x}{i}" for i in range(self.n_modes) for x in "qp"]
        for a in names:
            for b in names:
                want = 0
                if a[1:] == b[1:] and a != b:
                    want = 1 if a[0] == "q" else -1
                br = poisson_bracket(self.images[a], self.images[b], self.n_modes)
                if not br.is_close(want, tol):
                    return False
        return True

    def __str__(self):
        return "; ".join(f"{v} -> {self.images[v]}" for v in sorted(self.images, key=lambda s: (s[1:], s[0])))


def _ordered_subs(poly, cur):
    """Substitute current images, refusing products whose operator ordering is ambiguous."""
    for mono in poly.terms:
        factors = [v for v, e in mono for _ in range(e) if _is_phase_var(v)]
        if len(factors) < 2:
            continue
        imgs = [cur[v] for v in factors]
        if all(i.phase_degree() <= 1 for i in imgs):
            continue
        seen = set().union(*(i.phase_vars() for i in imgs))
        if any(_conj_partner(v) in seen for v in seen):
            raise AlgebraError(
                "word has no unambiguous polynomial Heisenberg action "
                "(a non-affine image would be multiplied with its conjugate quadrature)"
            )
    return poly.subs(cur)


def gate_map(op):
    """Heisenberg action of a single gate."""
    k = op.kind
    n = max(op.modes) + 1
    m = op.modes[0]
    q, p = f"q{m}", f"p{m}"
    Q, P = Poly.var(q), Poly.var(p)
    imgs = {}
    exact = True
    if k == "phase":
        pass
    elif k == "X":
        imgs[q] = Q + op.param(0)
    elif k == "Z":
        imgs[p] = P + op.param(0)
    elif k == "U2":
        imgs[p] = P + 2 * op.param(0) * Q
    elif k == "U3":
        imgs[p] = P + 3 * op.param(0) * Q * Q
    elif k == "F":
        imgs[q], imgs[p] = -P, Q
    elif k == "Finv":
        imgs[q], imgs[p] = P, -Q
    elif k == "Squeeze":
        (r,) = op.numeric_params()
        imgs[q], imgs[p] = math.exp(-r) * Q, math.exp(r) * P
        exact = r == 0
    elif k == "Rotate":
        (th,) = op.numeric_params()
        c, s = math.cos(th), math.sin(th)
        imgs[q], imgs[p] = c * Q - s * P, s * Q + c * P
        exact = th == 0
    elif k == "CZ":
        g = op.param(0, 1)
        m2 = op.modes[1]
        imgs[p] = P + g * Poly.var(f"q{m2}")
        imgs[f"p{m2}"] = Poly.var(f"p{m2}") + g * Q
    base = PolyMap.identity(n).images
    base.update(imgs)
    return PolyMap(base, n, exact)


def heisenberg(word, n_modes=None):
    """Polynomial action of a whole word (first element acts first)."""
    n = max(word_n_modes(word), n_modes or 1)
    out = PolyMap.identity(n)
    for op in word:
        out = out.then(gate_map(op))
    return out


def decompose_affine(pmap):
    """Write a map of the form ``q_i -> q_i + a_i, p_i -> p_i + b_i + sum_j s_ij q_j`` as a word.

    The word uses ``X``, ``Z``, ``U2`` and ``CZ`` only.  Raises
    :class:`AlgebraError` for any other shape.
    """
    n = pmap.n_modes
    a, b, s = [], [], {}
    for i in range(n):
        qi, pi = f"q{i}", f"p{i}"
        gq = pmap[qi].split_phase()
        for mono in gq:
            if mono not in ((), ((qi, 1),)):
                raise AlgebraError(f"image of {qi} is not a pure q-translation: {pmap[qi]}")
        if gq.get(((qi, 1),), Poly()) != Poly.const(1):
            raise AlgebraError(f"image of {qi} does not keep unit coefficient")
        a.append(gq.get((), Poly()))
        gp = pmap[pi].split_phase()
        if gp.get(((pi, 1),), Poly()) != Poly.const(1):
            raise AlgebraError(f"image of {pi} does not keep unit coefficient")
        b.append(gp.get((), Poly()))
        for mono, c in gp.items():
            if mono in ((), ((pi, 1),)):
                continue
            if len(mono) != 1 or mono[0][1] != 1 or mono[0][0][0] != "q":
                raise AlgebraError(f"image of {pi} is not affine in q: {pmap[pi]}")
            s[(i, int(mono[0][0][1:]))] = c
    for (i, j), c in s.items():
        if not c.is_close(s.get((j, i), Poly()), 0 if pmap.exact else INEXACT_TOL):
            raise AlgebraError("p-shear is not symmetric; map is not canonical")
    word = [X(a[i], i) for i in range(n) if a[i]]
    for i in range(n):
        shift = b[i]
        for j in range(n):
            if (i, j) in s:
                shift = shift - s[(i, j)] * a[j]
        if shift:
            word.append(Z(shift, i))
    for i in range(n):
        if (i, i) in s:
            word.append(U2(s[(i, i)] * Fraction(1, 2), i))
        for j in range(i + 1, n):
            if (i, j) in s:
                word.append(CZ(s[(i, j)], (i, j)))
    return word


# -- Table I -------------------------------------------------------------------


def table_i_correction(gate, enc, mutate=False):
    """Correction word for ``gate`` after encryption ``enc`` as printed in Table I.

    ``enc`` is ``(Q, P)`` for single-mode gates or ``((Q1, P1), (Q2, P2))``
    for ``CZ``.  The operator products in the table act right to left, so
    e.g. ``X(-Q)Z(3Q^2T-P)U2(-3QT)`` becomes the word
    ``[U2(-3QT), Z(3Q^2T-P), X(-Q)]``.  ``mutate=True`` flips the sign of the
    ``Z`` argument in the ``U2`` row (used to check that verification can fail).
    """
    k = gate.kind
    if k == "CZ":
        (Q1, P1), (Q2, P2) = [(Poly.coerce(x), Poly.coerce(y)) for x, y in enc]
        m1, m2 = gate.modes
        g = gate.param(0, 1)  # the table row is g = 1
        return [Z(-g * Q2 - P1, m1), X(-Q1, m1), Z(-g * Q1 - P2, m2), X(-Q2, m2)]
    Q, P = Poly.coerce(enc[0]), Poly.coerce(enc[1])
    m = gate.modes[0]
    if k in ("X", "Z"):
        return [Z(-P, m), X(-Q, m)]
    if k == "U2":
        T = gate.param(0)
        arg = -2 * Q * T - P
        return [Z(-arg if mutate else arg, m), X(-Q, m)]
    if k == "U3":
        T = gate.param(0)
        return [U2(-3 * Q * T, m), Z(3 * Q * Q * T - P, m), X(-Q, m)]
    if k == "F":
        return [Z(-Q, m), X(P, m)]
    raise ValueError(f"Table I has no row for {k}")


TABLE_I_GATES = ("Z", "X", "U2", "U3", "F", "CZ")


def encryption_word(enc, modes=(0,)):
    """Word for ``D(Q, P)`` on each mode (as ``X(Q)`` then ``Z(P)``; the order only changes a phase)."""
    if len(modes) == 1:
        enc = (enc,)
    out = []
    for (Q, P), m in zip(enc, modes):
        out += [X(Q, m), Z(P, m)]
    return out


@dataclass
class CorrectionReport:
    gate: str
    ok: bool
    correction: list
    residual: dict

    def residual_str(self):
        return "; ".join(f"{v}: {d}" for v, d in self.residual.items() if d)


def verify_correction(gate, enc, correction=None, mutate=False):
    """Check ``heisenberg(D, G, C) == heisenberg(G)`` with ``C`` from Table I.

    Returns a :class:`CorrectionReport`; on failure ``residual`` holds the
    nonzero polynomial differences of the images.
    """
    if correction is None:
        correction = table_i_correction(gate, enc, mutate=mutate)
    enc_word = encryption_word(enc, gate.modes)
    lhs = heisenberg(enc_word + [gate] + correction)
    rhs = heisenberg([gate], lhs.n_modes)
    tol = 0.0 if (lhs.exact and rhs.exact) else INEXACT_TOL
    residual = {v: d for v, d in lhs.difference(rhs).items() if not d.is_close(0, tol)}
    return CorrectionReport(gate.kind, not residual, correction, residual)


# -- sliding and composition --------------------------------------------------


def slide(correction, gate):
    """Move ``correction`` from after ``gate`` to before it.

    Returns ``C'`` with ``heisenberg([C', gate]) == heisenberg([gate, C])``,
    i.e. ``C' = G^dag C G`` up to a phase (phases are not tracked).  For
    Gaussian ``gate`` the result holds only ``X``/``Z`` (and ``CZ``/``U2``
    when the correction itself contains shears); sliding a translation
    through ``U3`` emits a ``U2`` element.
    """
    for op in correction:
        if op.kind not in ("X", "Z", "U2", "phase"):
            raise ValueError("corrections may only contain X, Z, U2 and phase elements")
    n = max(word_n_modes(correction), word_n_modes([gate]))
    conj = heisenberg([gate] + list(correction) + [gate.inverse()], n)
    return decompose_affine(conj)


def push_forward(correction, gate):
    """``G C G^dag``: the word ``C''`` with ``heisenberg([gate, C'']) == heisenberg([C, gate])``."""
    n = max(word_n_modes(correction), word_n_modes([gate]))
    conj = heisenberg([gate.inverse()] + list(correction) + [gate], n)
    return decompose_affine(conj)


@dataclass
class GadgetRecord:
    """U3 occurrence handled by the interactive gadget.

    ``shear`` is the total ``U2`` the gadget must apply right after the
    ``U3`` (``A + B``) to discharge the key-dependent shear.
    """

    index: int
    mode: int
    T: Poly
    key_q: Poly
    shear: Poly


def compose_program_correction(program, enc):
    """Final decryption word for ``program`` run on data encrypted with ``enc``.

    ``enc`` is a list of ``(Q, P)`` pairs, one per mode.  The key is
    tracked as a phase-space translation pushed through each gate.  A
    ``U3`` turns a q-translation ``a`` into ``U2(3aT)`` plus a translation;
    that shear is handed to the gadget (``needs_gadget`` entries) and the
    returned correction stays a pure translation.

    Returns ``(correction_word, needs_gadget)``.
    """
    n = max(len(enc), word_n_modes(program))
    e = []
    for i in range(n):
        Q, P = enc[i] if i < len(enc) else (0, 0)
        e += [Poly.coerce(Q), Poly.coerce(P)]
    gadgets = []
    for idx, op in enumerate(program):
        if op.kind == "phase":
            continue
        if op.kind == "U3":
            m = op.modes[0]
            T = op.param(0)
            a = e[2 * m]
            e[2 * m + 1] = e[2 * m + 1] - 3 * T * a * a
            gadgets.append(GadgetRecord(idx, m, T, a, -3 * a * T))
            continue
        S = _linear_part(op, n)
        e = [sum((S[i][j] * e[j] for j in range(2 * n) if S[i][j] != 0), Poly()) for i in range(2 * n)]
    word = []
    for i in range(n):
        if e[2 * i + 1]:
            word.append(Z(-e[2 * i + 1], i))
        if e[2 * i]:
            word.append(X(-e[2 * i], i))
    return word, gadgets


def _linear_part(op, n):
    """Linear coefficients of a Gaussian gate's Heisenberg map as a Poly matrix."""
    pm = gate_map(op).extended(n)
    names = [f"{x}{i}" for i in range(n) for x in "qp"]
    rows = []
    for v in names:
        parts = pm[v].split_phase()
        rows.append([parts.get(((w, 1),), Poly()) for w in names])
    return rows


def program_with_gadgets(program, gadgets):
    """Program with each gadget's ``U2`` shear inserted right after its ``U3``."""
    extra = {g.index: g for g in gadgets}
    out = []
    for i, op in enumerate(program):
        out.append(op)
        if i in extra:
            out.append(U2(extra[i].shear, extra[i].mode))
    return out


def verify_program_correction(program, enc):
    """Check ``heisenberg(D(enc), program', C) == heisenberg(program)``.

    ``program'`` includes the gadget shears; ``C`` is the displacement-only
    correction from :func:`compose_program_correction`.
    """
    corr, gadgets = compose_program_correction(program, enc)
    n = max(len(enc), word_n_modes(program))
    enc_word = encryption_word(tuple(enc), tuple(range(len(enc)))) if len(enc) > 1 else encryption_word(enc[0])
    lhs = heisenberg(enc_word + program_with_gadgets(program, gadgets) + corr, n)
    rhs = heisenberg(program, n)
    return lhs.equals(rhs), corr, gadgets


# -- numeric cross-check against the Fock backend -------------------------------


def evolve_ket(word, ket, dim, pad=None):
    """Apply a numeric word to a one- or two-mode ket with Fock-space matrices.

    Two-mode kets are ``dim x dim`` arrays indexed ``[n0, n1]``.
    """
    from . import fock

    ket = np.array(ket, dtype=complex)
    for op in word:
        if op.kind == "phase":
            continue
        prm = op.numeric_params()
        if op.kind == "CZ":
            ket = fock.cz_on_ket(ket, prm[0] if prm else 1.0, dim)
            continue
        U = fock.build_gate(op.kind, prm, dim, pad=pad, check_budget=False).matrix
        if ket.ndim == 1:
            ket = U @ ket
        elif op.modes[0] == 0:
            ket = U @ ket
        else:
            ket = ket @ U.T
    return ket


def fock_check_correction(gate, enc, kets, dim=64, mutate=False):
    """Fidelity between ``C G D |psi>`` and ``G |psi>`` on the Fock backend.

    ``kets`` are input state vectors (1-D for single-mode gates, 2-D for
    ``CZ``).  Returns the smallest overlap modulus, which sees relative
    phases that the Heisenberg check cannot.
    """
    corr = table_i_correction(gate, enc, mutate=mutate)
    enc_word = encryption_word(enc, gate.modes)
    worst = 1.0
    for ket in kets:
        a = evolve_ket(enc_word + [gate] + corr, ket, dim)
        b = evolve_ket([gate], ket, dim)
        ov = abs(np.vdot(b.reshape(-1), a.reshape(-1))) / (np.linalg.norm(a) * np.linalg.norm(b))
        worst = min(worst, float(ov))
    return worst
