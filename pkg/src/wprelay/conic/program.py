"""Block-structured conic programs, lowering to standard form, and KKT checks.

A :class:`ConicProgram` maximizes a linear functional of named block variables.
Block kinds:

``psd``     real symmetric d x d, constrained psd
``hpsd``    complex Hermitian d x d, constrained psd (lowered through real_embed)
``nonneg``  real vector of length d, elementwise >= 0
``free``    real vector of length d

Linear functionals are dicts ``{block_name: coefficient}`` evaluated as
``sum Re tr(coef^H X)``.  Constraints compare one functional against a scalar
(``eq`` or ``le``).  LMIs ask ``const + sum_blocks T_b(X_b)`` to be psd, where
the coefficient tensor ``T_b`` has shape ``(m, m, *block_shape)`` and entry
``(a, b)`` of the LMI is ``sum_ij T_b[a, b, i, j] X_b[i, j]`` (plain sum of
products, so complex LMIs are expressible).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..matrix import hermitize, real_embed, real_unembed
from .ipm import StandardForm, solve_standard

log = logging.getLogger(__name__)

BLOCK_KINDS = ("psd", "hpsd", "nonneg", "free")
SENSES = ("eq", "le")


@dataclass(frozen=True)
class Block:
    name: str
    kind: str
    dim: int

    @property
    def shape(self) -> tuple:
        return (self.dim, self.dim) if self.kind in ("psd", "hpsd") else (self.dim,)

    @property
    def n_coords(self) -> int:
        d = self.dim
        if self.kind == "psd":
            return d * (d + 1) // 2
        if self.kind == "hpsd":
            return d * d
        return d


@dataclass(frozen=True)
class Constraint:
    coeffs: Mapping[str, np.ndarray]
    sense: str
    rhs: float
    label: str = ""


@dataclass(frozen=True)
class Lmi:
    const: np.ndarray
    terms: Mapping[str, np.ndarray]
    label: str = ""

    @property
    def dim(self) -> int:
        return self.const.shape[0]


@dataclass(frozen=True)
class ConicProgram:
    blocks: tuple
    objective: Mapping[str, np.ndarray]
    constraints: tuple = ()
    lmis: tuple = ()

    def block(self, name: str) -> Block:
        for b in self.blocks:
            if b.name == name:
                return b
        raise KeyError(name)

    def evaluate(self, coeffs: Mapping[str, np.ndarray], values: Mapping[str, np.ndarray]) -> float:
        return float(sum(np.real(np.vdot(a, values[k])) for k, a in coeffs.items()))

    def lmi_value(self, lmi: Lmi, values: Mapping[str, np.ndarray]) -> np.ndarray:
        out = np.array(lmi.const, dtype=complex)
        for name, t in lmi.terms.items():
            x = values[name]
            out = out + np.tensordot(t, x, axes=x.ndim)
        return out


class ProgramBuilder:
    """Incrementally assemble a :class:`ConicProgram`."""

    def __init__(self):
        self._blocks: list[Block] = []
        self._objective: dict = {}
        self._constraints: list[Constraint] = []
        self._lmis: list[Lmi] = []

    def add_block(self, name: str, kind: str, dim: int) -> str:
        if kind not in BLOCK_KINDS:
            raise ValueError(f"unknown block kind {kind!r}")
        if dim <= 0:
            raise ValueError(f"block {name!r} has nonpositive dimension")
        if any(b.name == name for b in self._blocks):
            raise ValueError(f"duplicate block {name!r}")
        self._blocks.append(Block(name, kind, int(dim)))
        return name

    def _block(self, name):
        for b in self._blocks:
            if b.name == name:
                return b
        raise ValueError(f"constraint references undeclared block {name!r}")

    def _check_coeffs(self, coeffs):
        out = {}
        for name, a in coeffs.items():
            blk = self._block(name)
            a = np.asarray(a)
            if blk.kind != "hpsd":
                if np.iscomplexobj(a):
                    if np.any(np.imag(a) != 0):
                        raise ValueError(f"complex coefficient on real block {name!r}")
                    a = np.real(a)
                a = a.astype(float)
            else:
                a = a.astype(complex)
            if a.shape != blk.shape:
                raise ValueError(f"coefficient for {name!r} has shape {a.shape}, expected {blk.shape}")
            if not np.all(np.isfinite(a)):
                raise ValueError(f"non-finite coefficient on block {name!r}")
            if blk.kind in ("psd", "hpsd"):
                a = hermitize(a)
            out[name] = a
        return out

    def set_objective(self, coeffs: Mapping[str, np.ndarray]) -> None:
        self._objective = self._check_coeffs(coeffs)

    def add_constraint(self, coeffs, sense: str, rhs: float, label: str = "") -> int:
        if sense not in SENSES:
            raise ValueError(f"unknown sense {sense!r}")
        if not np.isfinite(rhs):
            raise ValueError("non-finite right-hand side")
        self._constraints.append(Constraint(self._check_coeffs(coeffs), sense, float(rhs), label))
        return len(self._constraints) - 1

    def add_lmi(self, const, terms, label: str = "") -> int:
        const = np.asarray(const)
        if const.ndim != 2 or const.shape[0] != const.shape[1]:
            raise ValueError("LMI constant must be square")
        m = const.shape[0]
        checked = {}
        for name, t in terms.items():
            blk = self._block(name)
            t = np.asarray(t)
            if t.shape != (m, m) + blk.shape:
                raise ValueError(f"LMI term for {name!r} has shape {t.shape}")
            if not np.all(np.isfinite(t)):
                raise ValueError("non-finite LMI coefficient")
            checked[name] = t
        if not np.all(np.isfinite(const)):
            raise ValueError("non-finite LMI constant")
        self._lmis.append(Lmi(const, checked, label))
        return len(self._lmis) - 1

    def build(self) -> ConicProgram:
        if not self._blocks:
            raise ValueError("program has no blocks")
        return ConicProgram(tuple(self._blocks), dict(self._objective), tuple(self._constraints), tuple(self._lmis))


# ---------------------------------------------------------------- coordinates


def block_basis(blk: Block) -> np.ndarray:
    """Basis tensor (n_coords, *shape); the block value is sum_i x_i basis[i]."""
    d = blk.dim
    if blk.kind in ("nonneg", "free"):
        return np.eye(d)
    dtype = complex if blk.kind == "hpsd" else float
    out = []
    for i in range(d):
        for j in range(i, d):
            e = np.zeros((d, d), dtype=dtype)
            e[i, j] = e[j, i] = 1.0
            out.append(e)
    if blk.kind == "hpsd":
        for i in range(d):
            for j in range(i + 1, d):
                e = np.zeros((d, d), dtype=complex)
                e[i, j] = 1j
                e[j, i] = -1j
                out.append(e)
    return np.array(out)


def _embed(m: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(m):
        return real_embed(m)
    return m


@dataclass
class Lowered:
    sf: StandardForm
    offsets: dict
    bases: dict
    lp_rows: list  # ("con", k, scale) | ("nonneg", name, i)
    eq_rows: list  # (k, scale)
    psd_cones: list  # ("block", name) | ("lmi", k, complex_flag, scale)
    lp_index: dict = field(default_factory=dict)


def _row_scale(row: np.ndarray) -> float:
    m = float(np.max(np.abs(row), initial=0.0))
    return m if m > 0 else 1.0


def lower(prog: ConicProgram) -> Lowered:
    """Translate to the minimization standard form consumed by the IPM.

    Linear rows and LMIs are scaled by their largest coefficient; the scaling
    is undone when the duals are mapped back.
    """
    offsets, bases = {}, {}
    n = 0
    for blk in prog.blocks:
        offsets[blk.name] = n
        bases[blk.name] = block_basis(blk)
        n += blk.n_coords

    def coords(coeffs):
        v = np.zeros(n)
        for name, a in coeffs.items():
            basis = bases[name]
            o = offsets[name]
            v[o : o + basis.shape[0]] = np.real(np.tensordot(basis.conj(), a, axes=a.ndim))
        return v

    c = -coords(prog.objective)
    g_rows, h_vals, lp_rows = [], [], []
    a_rows, b_vals, eq_rows = [], [], []
    for k, con in enumerate(prog.constraints):
        row = coords(con.coeffs)
        sc = _row_scale(row)
        if con.sense == "le":
            g_rows.append(row / sc)
            h_vals.append(con.rhs / sc)
            lp_rows.append(("con", k, sc))
        else:
            a_rows.append(row / sc)
            b_vals.append(con.rhs / sc)
            eq_rows.append((k, sc))
    for blk in prog.blocks:
        if blk.kind == "nonneg":
            o = offsets[blk.name]
            for i in range(blk.dim):
                row = np.zeros(n)
                row[o + i] = -1.0
                g_rows.append(row)
                h_vals.append(0.0)
                lp_rows.append(("nonneg", blk.name, i))

    g_psd, h_psd, cones = [], [], []
    for blk in prog.blocks:
        if blk.kind in ("psd", "hpsd"):
            o = offsets[blk.name]
            basis = bases[blk.name]
            g = np.zeros((n,) + (2 * blk.dim,) * 2 if blk.kind == "hpsd" else (n, blk.dim, blk.dim))
            for i in range(basis.shape[0]):
                g[o + i] = -_embed(basis[i])
            g_psd.append(g)
            h_psd.append(np.zeros(g.shape[1:]))
            cones.append(("block", blk.name))
    for k, lmi in enumerate(prog.lmis):
        m = lmi.dim
        mats = np.zeros((n, m, m), dtype=complex)
        for name, t in lmi.terms.items():
            basis = bases[name]
            o = offsets[name]
            ax = basis.ndim - 1
            mats[o : o + basis.shape[0]] = np.moveaxis(np.tensordot(t, basis, axes=(list(range(2, 2 + ax)), list(range(1, 1 + ax)))), 2, 0)
        const = np.asarray(lmi.const, dtype=complex)
        is_complex = bool(np.any(np.imag(mats) != 0) or np.any(np.imag(const) != 0))
        if not (np.allclose(const, const.conj().T) and np.allclose(mats, np.conj(np.transpose(mats, (0, 2, 1))))):
            raise ValueError(f"LMI {k} ({lmi.label}) is not Hermitian")
        if is_complex:
            gk = np.array([-real_embed(hermitize(mm)) for mm in mats]) if n else np.zeros((0, 2 * m, 2 * m))
            hk = real_embed(hermitize(const))
        else:
            gk = -np.real(0.5 * (mats + np.transpose(mats, (0, 2, 1))))
            hk = np.real(hermitize(const))
        sc = max(_row_scale(gk.ravel()), _row_scale(hk.ravel()))
        g_psd.append(gk / sc)
        h_psd.append(hk / sc)
        cones.append(("lmi", k, is_complex, sc))

    sf = StandardForm(
        c=c,
        G_lp=np.array(g_rows).reshape(len(g_rows), n),
        h_lp=np.array(h_vals, dtype=float),
        G_psd=g_psd,
        h_psd=h_psd,
        A=np.array(a_rows).reshape(len(a_rows), n),
        b=np.array(b_vals, dtype=float),
    )
    return Lowered(sf, offsets, bases, lp_rows, eq_rows, cones)


# ------------------------------------------------------------------ solutions


@dataclass(frozen=True)
class KktResiduals:
    primal: float
    dual: float
    gap: float

    def max(self) -> float:
        return max(self.primal, self.dual, self.gap)


@dataclass
class ConicSolution:
    status: str
    values: dict
    objective: float
    dual_objective: float
    constraint_duals: np.ndarray
    cone_duals: list
    kkt: KktResiduals
    iterations: int
    history: list
    certificate: dict | None = None
    x: np.ndarray | None = None
    y: np.ndarray | None = None
    z_lp: np.ndarray | None = None
    z_psd: list | None = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _values_from_x(prog: ConicProgram, low: Lowered, x: np.ndarray) -> dict:
    vals = {}
    for blk in prog.blocks:
        basis = low.bases[blk.name]
        o = low.offsets[blk.name]
        v = np.tensordot(x[o : o + basis.shape[0]], basis, axes=1)
        vals[blk.name] = v
    return vals


def _x_from_values(prog: ConicProgram, low: Lowered, values: Mapping[str, np.ndarray]) -> np.ndarray:
    x = np.zeros(low.sf.n)
    for blk in prog.blocks:
        v = np.asarray(values[blk.name])
        o = low.offsets[blk.name]
        if blk.kind in ("nonneg", "free"):
            x[o : o + blk.dim] = np.real(v)
            continue
        d = blk.dim
        iu = np.triu_indices(d)
        re = np.real(v)[iu]
        x[o : o + re.size] = re
        if blk.kind == "hpsd":
            iu1 = np.triu_indices(d, 1)
            x[o + re.size : o + re.size + iu1[0].size] = np.imag(v)[iu1]
    return x


def _min_eig(m: np.ndarray) -> float:
    if m.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh(hermitize(m))[0])


def kkt_residuals(prog: ConicProgram, sol: ConicSolution) -> KktResiduals:
    """Recompute (primal, dual, gap) residuals of ``sol`` from the program data.

    primal: worst violation of rows, nonneg entries, psd blocks and LMIs in the
    scaled standard form, over (1 + largest scaled rhs).
    dual:   ||G'z + A'y + c||_inf / (1 + ||c||_inf) plus dual-cone violation.
    gap:    |primal objective - dual objective| / (1 + |primal objective|).
    """
    low = lower(prog)
    sf = low.sf
    for blk in prog.blocks:
        if blk.name not in sol.values or np.shape(sol.values[blk.name]) != blk.shape:
            raise ValueError(f"solution value for block {blk.name!r} missing or misshapen")
    if sol.y is None or sol.z_lp is None or sol.z_psd is None:
        raise ValueError("solution carries no dual variables")
    if sol.y.shape != (sf.A.shape[0],) or sol.z_lp.shape != (sf.G_lp.shape[0],) or len(sol.z_psd) != len(sf.h_psd):
        raise ValueError("dual variable shapes do not match the program")
    x = _x_from_values(prog, low, sol.values)
    gx_lp, gx_psd = sf.G_apply(x)
    viol = [0.0]
    if sf.G_lp.shape[0]:
        viol.append(float(np.max(gx_lp - sf.h_lp)))
    if sf.A.shape[0]:
        viol.append(float(np.max(np.abs(sf.A @ x - sf.b))))
    for g, h in zip(gx_psd, sf.h_psd):
        viol.append(-_min_eig(h - g))
    scale = 1.0 + max(np.max(np.abs(sf.h_lp), initial=0.0), np.max(np.abs(sf.b), initial=0.0),
                      *[np.max(np.abs(h)) for h in sf.h_psd] if sf.h_psd else [0.0])
    primal = max(viol) / scale

    rd = sf.G_adjoint(sol.z_lp, sol.z_psd) + sf.A.T @ sol.y + sf.c
    dual = float(np.max(np.abs(rd), initial=0.0)) / (1.0 + float(np.max(np.abs(sf.c), initial=0.0)))
    cone_viol = [0.0]
    if sol.z_lp.size:
        cone_viol.append(float(-np.min(sol.z_lp)))
    cone_viol += [-_min_eig(z) for z in sol.z_psd]
    dual += max(cone_viol)

    pobj = prog.evaluate(prog.objective, sol.values)
    dobj = float(sf.h_dot(sol.z_lp, sol.z_psd) + sf.b @ sol.y)
    gap = abs(pobj - dobj) / (1.0 + abs(pobj))
    return KktResiduals(max(primal, 0.0), dual, gap)


def solve(prog: ConicProgram, tol: float = 1e-7, max_iter: int = 100) -> ConicSolution:
    """Solve ``prog``; see the module docstring for the program semantics."""
    low = lower(prog)
    sf = low.sf
    res = solve_standard(sf, tol=tol, max_iter=max_iter)
    if res.status in ("optimal", "max_iter"):
        values = _values_from_x(prog, low, res.x)
    else:
        values = {b.name: np.full(b.shape, np.nan) for b in prog.blocks}
    con_duals = np.zeros(len(prog.constraints))
    for r, row in enumerate(low.lp_rows):
        if row[0] == "con":
            con_duals[row[1]] = res.z_lp[r] / row[2]
    for r, (k, sc) in enumerate(low.eq_rows):
        con_duals[k] = res.y[r] / sc
    cone_duals = []
    for cone, z in zip(low.psd_cones, res.z_psd):
        if cone[0] == "lmi" and cone[2]:
            cone_duals.append(real_unembed(z) / cone[3] * 2.0)
        elif cone[0] == "lmi":
            cone_duals.append(z / cone[3])
        else:
            cone_duals.append(z)
    certificate = None
    if res.status == "infeasible":
        certificate = {"y": res.y, "z_lp": res.z_lp, "z_psd": res.z_psd}
    elif res.status == "unbounded":
        certificate = {"x": res.x, "values": _values_from_x(prog, low, res.x)}
    if res.status in ("optimal", "max_iter"):
        pobj = prog.evaluate(prog.objective, values)
        dobj = float(sf.h_dot(res.z_lp, res.z_psd) + sf.b @ res.y)
    else:
        pobj = dobj = np.nan
    sol = ConicSolution(
        status=res.status,
        values=values,
        objective=pobj,
        dual_objective=dobj,
        constraint_duals=con_duals,
        cone_duals=cone_duals,
        kkt=KktResiduals(np.nan, np.nan, np.nan),
        iterations=res.iterations,
        history=res.history,
        certificate=certificate,
        x=res.x,
        y=res.y,
        z_lp=res.z_lp,
        z_psd=res.z_psd,
    )
    if res.status in ("optimal", "max_iter"):
        sol.kkt = kkt_residuals(prog, sol)
    return sol


# ---------------------------------------------------------------------- dump


def _enc(a: np.ndarray):
    a = np.asarray(a)
    if np.iscomplexobj(a):
        return {"re": np.real(a).tolist(), "im": np.imag(a).tolist()}
    return a.tolist()


def _dec(v):
    if isinstance(v, dict):
        return np.array(v["re"]) + 1j * np.array(v["im"])
    return np.array(v, dtype=float)


def dump_program(prog: ConicProgram) -> str:
    """Plain-text dump: one ``block`` line per block, an ``objective`` line, then
    one line per constraint and per LMI.  Coefficients are JSON objects keyed by
    block name; complex arrays are ``{"re": ..., "im": ...}``.
    """
    lines = ["# conic program, maximize objective"]
    for b in prog.blocks:
        lines.append(f"block {b.name} {b.kind} {b.dim}")
    lines.append("objective " + json.dumps({k: _enc(v) for k, v in prog.objective.items()}))
    for con in prog.constraints:
        lines.append(f"constraint {con.sense} {con.rhs!r} " + json.dumps({"label": con.label, "coeffs": {k: _enc(v) for k, v in con.coeffs.items()}}))
    for lmi in prog.lmis:
        lines.append("lmi " + json.dumps({"label": lmi.label, "const": _enc(lmi.const), "terms": {k: _enc(v) for k, v in lmi.terms.items()}}))
    return "\n".join(lines) + "\n"


def load_program(text: str) -> ConicProgram:
    b = ProgramBuilder()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tag, _, rest = line.partition(" ")
        if tag == "block":
            name, kind, dim = rest.split()
            b.add_block(name, kind, int(dim))
        elif tag == "objective":
            b.set_objective({k: _dec(v) for k, v in json.loads(rest).items()})
        elif tag == "constraint":
            sense, rhs, payload = rest.split(" ", 2)
            d = json.loads(payload)
            b.add_constraint({k: _dec(v) for k, v in d["coeffs"].items()}, sense, float(rhs), d["label"])
        elif tag == "lmi":
            d = json.loads(rest)
            b.add_lmi(_dec(d["const"]), {k: _dec(v) for k, v in d["terms"].items()}, d["label"])
        else:
            raise ValueError(f"line {lineno}: unknown record {tag!r}")
    return b.build()
