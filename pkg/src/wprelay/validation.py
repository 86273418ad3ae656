"""Property suite behind ``wprelay validate``.

Each check returns a :class:`CheckResult`.  The heavier structural checks
(normality of the two feasible sets, the Cauchy-coefficient rule, recovery of
PS decisions) are also exposed as functions so tests can run them with larger
sample counts or with deliberately broken components (``program_fn`` /
``theta_fn``) to confirm that they catch the breakage.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import time
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .baselines import from_ps, from_ts, optimize_brs
from .chance import (MomentAmbiguitySet, chance_satisfied, empirical_violation, gaussian_sampler,
                     scale_mixture_sampler, two_point_sampler, worst_case_violation)
from .conic import ProgramBuilder, solve
from .matrix import eig_hermitian, inner, is_psd, rand_hermitian, real_embed
from .polyblock import OracleAnswer, in_polyblock, run_monotonic
from .ps import (PsSolution, initial_ps_vertex, optimize_ps, ps_feasibility_sdp, ps_program, received_power,
                 recover_ps_ratios, theta_star, tightened_recovery, verify_ps_solution, _eh_lines as ps_eh_lines)
from .scenario import NetworkScenario, draw_channels, path_loss_db
from .ts import (TsSolution, build_ts_matrices, optimize_ts, ts_objective, ts_projection_feasibility,
                 verify_ts_solution, _eh_lines as ts_eh_lines)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0


# ---------------------------------------------------------------- mat-core


def check_eig_reconstruction(rng, count: int = 1000, max_dim: int = 12) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(count):
        n = int(rng.integers(1, max_dim + 1))
        m = rand_hermitian(rng, n)
        w, v = eig_hermitian(m)
        res = np.max(np.abs(m - (v * w) @ v.conj().T))
        bound = 1e-10 * n * max(np.max(np.abs(w)), 1e-300)
        worst = max(worst, res / bound)
        if res > bound or np.any(np.diff(w) > 0):
            return False, f"residual {res:.2e} above bound {bound:.2e} (dim {n})"
    return True, f"{count} matrices, worst residual/bound {worst:.2e}"


def check_real_embed_psd(rng, count: int = 300) -> tuple[bool, str]:
    for _ in range(count):
        n = int(rng.integers(1, 7))
        m = rand_hermitian(rng, n)
        if rng.random() < 0.5:  # make half of them psd
            m = m @ m.conj().T
        if is_psd(m) != is_psd(real_embed(m)):
            return False, "psd verdict changed under the real embedding"
    return True, f"{count} samples"


def check_inner_product(rng, count: int = 100) -> tuple[bool, str]:
    for _ in range(count):
        n = int(rng.integers(1, 6))
        a, b, c = (rand_hermitian(rng, n) for _ in range(3))
        s, t = rng.standard_normal(2)
        if abs(inner(a, b) - inner(b, a)) > 1e-12 * (1 + abs(inner(a, b))):
            return False, "inner product not symmetric"
        lhs = inner(s * a + t * b, c)
        if abs(lhs - (s * inner(a, c) + t * inner(b, c))) > 1e-10 * (1 + abs(lhs)):
            return False, "inner product not linear"
    return True, f"{count} samples"


# ------------------------------------------------------------------- solver


def lambda_max_program(C: np.ndarray):
    b = ProgramBuilder()
    b.add_block("X", "psd", C.shape[0])
    b.set_objective({"X": C})
    b.add_constraint({"X": np.eye(C.shape[0])}, "eq", 1.0)
    return b.build()


def check_lambda_max(rng, count: int = 200, dim: int = 4, tol: float = 1e-6,
                     kkt_tol: float = 1e-7) -> tuple[bool, str]:
    """max <C, X> s.t. tr X = 1, X psd equals lambda_max(C); KKT and weak duality on each solve."""
    worst = worst_kkt = 0.0
    for _ in range(count):
        C = rand_hermitian(rng, dim, complex_=False)
        sol = solve(lambda_max_program(C))
        lam = float(np.linalg.eigvalsh(C)[-1])
        if sol.status != "optimal":
            return False, f"status {sol.status}"
        err = abs(sol.objective - lam)
        worst = max(worst, err)
        worst_kkt = max(worst_kkt, sol.kkt.max())
        if err > tol * (1 + abs(lam)):
            return False, f"objective {sol.objective} vs lambda_max {lam}"
        if sol.kkt.max() > kkt_tol:
            return False, f"kkt residual {sol.kkt.max():.2e}"
        if sol.objective > sol.dual_objective + kkt_tol * (1 + abs(sol.objective)):
            return False, "weak duality violated"
    return True, f"{count} instances, worst error {worst:.1e}, worst kkt {worst_kkt:.1e}"


def check_solver_determinism(rng) -> tuple[bool, str]:
    C = rand_hermitian(rng, 5, complex_=False)
    prog = lambda_max_program(C)
    a, b = solve(prog), solve(prog)
    ok = a.status == b.status and a.objective == b.objective and a.iterations == b.iterations
    return ok, "identical reruns" if ok else "reruns differ"


# ----------------------------------------------------------------- scenario


def check_scenario_invariants(rng, draws: int = 200) -> tuple[bool, str]:
    sc = NetworkScenario()
    for _ in range(draws):
        r = draw_channels(sc, rng)
        if not all(is_psd(S) for S in r.Sigma):
            return False, "Sigma not psd"
    d = np.sort(rng.uniform(0.1, 100, 50))
    if np.any(np.diff(path_loss_db(d, sc)) <= 0):
        return False, "path loss not increasing in distance"
    p = rng.uniform(0, 1e6, 20)
    back = np.array([sc.mw_to_normalized(sc.normalized_to_mw(x)) for x in p])
    if np.max(np.abs(back - p) / np.maximum(p, 1)) > 1e-12:
        return False, "normalization round trip is not the identity"
    return True, f"{draws} draws"


# ------------------------------------------------------------------- chance


def random_ambiguity(rng, n: int, phi_bar: float | None = None) -> MomentAmbiguitySet:
    u = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * rng.uniform(0, 0.7)
    L = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2 * n)
    S = L @ L.conj().T
    Sig = np.zeros((n + 1, n + 1), dtype=complex)
    Sig[:n, :n] = S + np.outer(u, u.conj())
    Sig[:n, n] = u
    Sig[n, :n] = u.conj()
    Sig[n, n] = 1.0
    amb = MomentAmbiguitySet(Sig, phi_bar if phi_bar is not None else float(rng.uniform(0.5, 3.0)))
    return amb, u, S


def check_chance_dominance(rng, count: int = 500, trials: int = 20_000) -> tuple[bool, str]:
    """Empirical violation under moment-matched laws never beats the worst case (3 stderr)."""
    worst = -np.inf
    for i in range(count):
        n = int(rng.integers(1, 4))
        amb, u, S = random_ambiguity(rng, n)
        c = rng.uniform(0, 1.5, n)
        wc = worst_case_violation(c, amb)
        if not 0.0 <= wc <= 1.0:
            return False, f"worst case {wc} outside [0, 1]"
        kind = i % 3
        sampler = (gaussian_sampler(u, S) if kind == 0 else scale_mixture_sampler(u, S) if kind == 1
                   else two_point_sampler(u, S, 0.2))
        est = empirical_violation(c**2, sampler, amb.phi_bar, trials, rng)
        excess = est.probability - wc - 3 * est.stderr - 1e-6
        worst = max(worst, est.probability - wc)
        if excess > 0:
            return False, f"empirical {est.probability:.4f} > worst case {wc:.4f} + 3 se"
    return True, f"{count} instances, largest empirical - worst case {worst:+.4f}"


def check_chance_homogeneity(rng, count: int = 50) -> tuple[bool, str]:
    for _ in range(count):
        n = int(rng.integers(1, 4))
        amb, _, _ = random_ambiguity(rng, n)
        c = rng.uniform(0, 1.5, n)
        t = float(rng.uniform(0.3, 3.0))
        amb_t = dataclasses.replace(amb, phi_bar=amb.phi_bar * t * t)
        a, b = worst_case_violation(c, amb), worst_case_violation(t * c, amb_t)
        if abs(a - b) > 1e-5:
            return False, f"homogeneity broken: {a} vs {b}"
    return True, f"{count} instances"


# ---------------------------------------------------------------- polyblock


def _synthetic_sets():
    """(name, membership, objective) for 2-D normal sets with known structure."""
    return [
        ("disk", lambda x: x[0] ** 2 + x[1] ** 2 <= 1.0, lambda z: float(z[0] * z[1])),
        ("simplex", lambda x: x[0] + x[1] <= 1.0, lambda z: float(z[0] * z[1])),
        ("kinked", lambda x: max(x[0] + 0.2 * x[1], 0.3 * x[0] + x[1]) <= 1.0, lambda z: float(z[0] + z[1])),
        ("nonconvex", lambda x: x[0] * x[1] <= 0.2 and max(x) <= 1.0, lambda z: float(z[0] * np.log2(1 + 4 * z[1]))),
    ]


def _box_samples(rng, vertices, count: int) -> np.ndarray:
    """Uniform draws from the union of boxes [0, v] (box chosen uniformly)."""
    V = np.asarray(vertices, dtype=float)
    idx = rng.integers(0, len(V), size=count)
    return V[idx] * rng.random((count, V.shape[1]))


def check_polyblock_sandwich(rng, grid: int = 200, eps: float = 1e-3) -> tuple[bool, str]:
    """Bound sandwich against a grid optimum, nested polyblocks and vertex growth on 2-D sets."""
    g = np.linspace(0, 1, grid + 1)
    X, Y = np.meshgrid(g, g, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], 1)
    for name, member, obj in _synthetic_sets():
        oracle = lambda z, lam, member=member: OracleAnswer(bool(member(lam * np.asarray(z))), None)
        tr = run_monotonic(np.array([1.0, 1.0]), obj, oracle, eps=eps, max_iter=2000, keep_vertices=True)
        if not tr.converged:
            return False, f"{name}: did not converge"
        feas_pts = pts[np.array([member(p) for p in pts])]
        vals = np.array([obj(p) for p in feas_pts])
        r_grid = float(vals.max())
        # objective change across one grid cell near the grid optimum
        top = feas_pts[np.argsort(vals)[-20:]]
        res = max(abs(obj(np.minimum(p + 1.0 / grid, 1.0)) - obj(p)) for p in top)
        for row in tr.rows:
            if row.r_lower > r_grid + res + eps or row.r_upper < r_grid - 1e-9:
                return False, f"{name}: bound sandwich broken at iteration {row.iteration}"
        n_v = [1] + [row.n_vertices for row in tr.rows]
        if max(np.diff(n_v), default=0) > 1:
            return False, f"{name}: more than one net new vertex in one iteration"
        prev = [np.array([1.0, 1.0])]
        feas_sample = feas_pts[rng.choice(len(feas_pts), size=100)]
        for row in tr.rows:
            if row.vertices is None:
                continue
            cur = [np.array(v) for v in row.vertices]
            if not all(in_polyblock(p, prev) for p in _box_samples(rng, cur, 50)):
                return False, f"{name}: P_(k+1) not inside P_k at iteration {row.iteration}"
            # feasible points on the grid may sit exactly on a cut face; nudge them inward
            if not all(in_polyblock(p * (1 - 1e-9), cur) for p in feas_sample):
                return False, f"{name}: a feasible point left the polyblock at iteration {row.iteration}"
            prev = cur
    return True, f"{len(_synthetic_sets())} synthetic sets"


# --------------------------------------------------------------- TS scheme


@dataclass
class Instance:
    """A scenario, a channel draw and lazily computed solutions on it."""

    scenario: NetworkScenario
    seed: int = 0
    eps: float = 1e-3
    max_iter: int = 150
    program_fn: Callable = ps_program
    theta_fn: Callable = theta_star

    @cached_property
    def realization(self):
        return draw_channels(self.scenario, np.random.default_rng(self.seed))

    @cached_property
    def ts(self) -> TsSolution:
        sc = self.scenario.replace(max_iter=self.max_iter)
        return optimize_ts(sc, self.realization, eps=self.eps, rounds=1)

    @cached_property
    def ps(self) -> PsSolution:
        return optimize_ps(self.scenario, self.realization, eps=self.eps, max_iter=self.max_iter,
                           theta_fn=self.theta_fn, program_fn=self.program_fn)


def check_ts_normality(inst: Instance, count: int = 100, rng=None) -> tuple[bool, str]:
    """Feasible (t, gamma) points found by the search dominate only oracle-feasible points."""
    rng = rng if rng is not None else np.random.default_rng(1)
    sol = inst.ts
    data = build_ts_matrices(inst.realization, sol.W1, inst.scenario.p_o, inst.scenario)
    lines = ts_eh_lines(data)
    feasible = [np.array(r.vertex) * r.lam for r in sol.trace.rows if r.lam > 0 and not math.isnan(r.lam)]
    feasible.append(np.asarray(sol.trace.incumbent))
    if not ts_projection_feasibility(data, 1.0, sol.trace.incumbent, lines).feasible:
        return False, "returned (t, gamma) is not oracle-feasible"
    for i in range(count):
        z = feasible[i % len(feasible)]
        zd = z * rng.random(2)
        if ts_objective(zd) > ts_objective(z) + 1e-12:
            return False, "objective not monotone"
        if not ts_projection_feasibility(data, 1.0, zd, lines).feasible:
            return False, f"dominated point {zd} of feasible {z} rejected"
    return True, f"{count} dominated points of {len(feasible)} feasible ones"


def check_ts_solution(inst: Instance) -> tuple[bool, str]:
    v = verify_ts_solution(inst.ts, inst.scenario, inst.realization)
    return v["ok"], f"budget {v['budget']}, trace {v['trace']}, chance {v['chance']}"


# --------------------------------------------------------------- PS scheme


def _original_xy(rho, p, W, realization, p_o):
    """(x_n^2, y_n^2) of a PS decision with covariance W."""
    y2 = np.clip((1 - rho) * received_power(realization, W, p_o), 0, None)
    return np.clip(p, 0, None) / (y2 + 1.0), y2


def _ps_constraints_ok(rho, p, W, realization, scenario, tol: float = 1e-6) -> bool:
    P = received_power(realization, W, scenario.p_o)
    cap = scenario.eta * rho * P
    return bool(np.all(p <= cap + tol * (1 + cap)) and np.all((rho >= -tol) & (rho <= 1 + tol))
                and np.real(np.trace(W)) <= 1 + tol and chance_satisfied(p, realization, scenario, slack=tol))


def _feasible_ps_points(inst: Instance, count: int, rng):
    """Boundary points of the PS set with a decision attaining them exactly."""
    sc, r = inst.scenario, inst.realization
    v0 = initial_ps_vertex(r, sc)
    lines = ps_eh_lines(r, sc)
    out = []
    while len(out) < count:
        z = v0 * rng.uniform(0.01, 1.0, 2) ** 2
        ok, wit, _ = ps_feasibility_sdp(r, z, 1.0, sc, lines, inst.theta_fn(z), inst.program_fn)
        if wit is None or wit.q <= 0:
            continue
        out.append(wit)
    return out


def check_ps_normality(inst: Instance, count: int = 100, rng=None) -> tuple[bool, str]:
    """Dominated points of feasible (X, Y) get a feasible witness by the alpha/beta scaling."""
    rng = rng if rng is not None else np.random.default_rng(2)
    sc, r = inst.scenario, inst.realization
    lines = ps_eh_lines(r, sc)
    g2 = np.abs(r.g) ** 2
    n_base = max(1, count // 4)
    bases = _feasible_ps_points(inst, n_base, rng)
    for i in range(count):
        wit = bases[i % n_base]
        rho1, p1 = tightened_recovery(wit, r, sc.p_o)
        x1, y1 = _original_xy(rho1, p1, wit.W, r, sc.p_o)
        X1, Y1 = float(np.sum(x1 * g2)), float(np.sum(y1))
        a2, b2 = rng.random(2)
        X2, Y2 = a2 * X1, b2 * Y1
        rho2 = 1 - b2 * (1 - rho1)
        P = received_power(r, wit.W, sc.p_o)
        p2 = a2 * x1 * ((1 - rho2) * P + 1)
        x2, y2 = _original_xy(rho2, p2, wit.W, r, sc.p_o)
        if not _ps_constraints_ok(rho2, p2, wit.W, r, sc):
            return False, "scaled witness violates the original constraints"
        if abs(np.sum(x2 * g2) - X2) > 1e-8 * (1 + X2) or abs(np.sum(y2) - Y2) > 1e-8 * (1 + Y2):
            return False, "scaled witness misses the dominated point"
        if not ps_feasibility_sdp(r, (X2, Y2), 1.0, sc, lines, inst.theta_fn((X2, Y2)), inst.program_fn)[0]:
            return False, f"dominated point ({X2:.4g}, {Y2:.4g}) rejected by the projection SDP"
    return True, f"{count} dominated points of {n_base} boundary points"


def check_theta_rule(inst: Instance, count: int = 50, rng=None) -> tuple[bool, str]:
    """A witness feasible for some theta yields one for theta* = sqrt(Y/X).

    Instances come from solving the SDP at a random ``theta0`` and shrinking
    the attained point a little; the explicit two-case construction is checked
    against the original constraints, then the projection SDP is re-solved with
    the coefficient from ``inst.theta_fn``.
    """
    rng = rng if rng is not None else np.random.default_rng(3)
    sc, r = inst.scenario, inst.realization
    lines = ps_eh_lines(r, sc)
    g2 = np.abs(r.g) ** 2
    g = np.sqrt(g2)
    theta_ref = theta_star(initial_ps_vertex(r, sc))
    done = 0
    while done < count:
        theta0 = theta_ref * 10 ** rng.uniform(-1.0, 1.0)
        _, wit, _ = ps_feasibility_sdp(r, (1.0, 1.0), 0.0, sc, lines, theta0, ps_program)
        if wit is None or wit.q <= 0:
            continue
        rho1, p1 = tightened_recovery(wit, r, sc.p_o)
        x1, y1 = _original_xy(rho1, p1, wit.W, r, sc.p_o)
        Xw, Yw = float(np.sum(x1 * g2)), float(np.sum(y1))
        u = rng.uniform(0.85, 0.98, 2)
        z = (u[0] * Xw, u[1] * Yw)
        th = theta_star(z)
        P = received_power(r, wit.W, sc.p_o)
        if theta0 > th:
            a2 = (th / theta0) ** 2
            rho_s = 1 - a2 * (1 - rho1)
            p_s = x1 * ((1 - rho_s) * P + 1)
        else:
            rho_s = rho1
            p_s = (theta0 / th) ** 2 * p1
        xs, ys = _original_xy(rho_s, p_s, wit.W, r, sc.p_o)
        if not _ps_constraints_ok(rho_s, p_s, wit.W, r, sc):
            return False, "constructed witness violates the original constraints"
        if np.sum(ys) < z[1] * (1 - 1e-8) or np.sum(xs * g2) < z[0] * (1 - 1e-8):
            return False, "constructed witness misses the target point"
        if np.max(np.abs(np.sqrt(ys) - th * np.sqrt(xs) * g)) > 1e-6 * (1 + np.max(np.sqrt(ys))):
            return False, "constructed witness breaks y = theta* x o g"
        ok, _, _ = ps_feasibility_sdp(r, z, 1.0, sc, lines, inst.theta_fn(z), inst.program_fn)
        if not ok:
            return False, f"SDP with the chosen coefficient rejects ({z[0]:.4g}, {z[1]:.4g}) (theta0 {theta0:.3g})"
        done += 1
    return True, f"{count} constructed instances"


def check_ps_recovery(sol: PsSolution, scenario: NetworkScenario, realization, tol: float = 1e-6) -> tuple[bool, str]:
    """Recovered (rho, p, W_p) meets the original constraints and attains the relaxed SNR."""
    v = verify_ps_solution(sol, scenario, realization, budget_tol=tol, chance_slack=tol)
    if not v["ok"]:
        return False, f"original constraints: budget {v['budget']}, rho {v['rho']}, trace {v['trace']}, chance {v['chance']}"
    wit = sol.trace.witness
    if wit is not None:
        rho = recover_ps_ratios(wit.W, wit.Wbar, realization.F)
        info = (1 - rho) * received_power(realization, wit.W, scenario.p_o)
        if np.any(wit.kappa > info + tol * (1 + info)):
            return False, "kappa exceeds the information power"
    if sol.gamma < sol.gamma_relaxed - tol * (1 + sol.gamma_relaxed):
        return False, f"achieved SNR {sol.gamma:.6g} below the relaxed value {sol.gamma_relaxed:.6g}"
    return True, f"gamma {sol.gamma:.6g} >= relaxed {sol.gamma_relaxed:.6g}"


def flipped_snr_lmi(realization, scenario, theta, eh_lines=None):
    """Mutant of the PS program: the kappa sign on the SNR LMI diagonal flipped."""
    prog = ps_program(realization, scenario, theta, eh_lines)
    lmis = []
    for lmi in prog.lmis:
        if lmi.label.startswith("snr"):
            terms = dict(lmi.terms)
            t = np.array(terms["kappa"], copy=True)
            t[0, 0] = -t[0, 0]
            terms["kappa"] = t
            lmi = dataclasses.replace(lmi, terms=terms)
        lmis.append(lmi)
    return dataclasses.replace(prog, lmis=tuple(lmis))


def unit_theta(z) -> float:
    """Mutant of the Cauchy coefficient rule: always 1."""
    return 1.0


# ---------------------------------------------------------------- baselines


def check_baselines(inst: Instance, slack: float = 1e-6) -> tuple[bool, str]:
    sc = inst.scenario.replace(epsilon=inst.eps, max_iter=inst.max_iter)
    lines = []
    for opt, scheme in ((from_ts(inst.ts), "ts"), (from_ps(inst.ps), "ps")):
        brs = optimize_brs(sc, inst.realization, scheme)
        for res in (opt, brs):
            if res.energy_efficiency != res.throughput / max(res.total_relay_power, 1e-12):
                return False, "energy efficiency identity broken"
        tol = slack + (opt.detail.trace.gap if not opt.converged else inst.eps)
        if opt.throughput < brs.throughput - tol:
            return False, f"OPT-{scheme.upper()} {opt.throughput:.6g} below BRS {brs.throughput:.6g}"
        lines.append(f"{scheme}: {opt.throughput:.4g} >= {brs.throughput:.4g}")
    return True, ", ".join(lines)


# ---------------------------------------------------------------------- cli


def check_sweep_reproducible() -> tuple[bool, str]:
    from .cli import SweepSpec, run_sweep  # noqa: PLC0415

    base = NetworkScenario(N=1, d_f=(2.0,), d_g=(2.0,), d_z=((3.0,),), epsilon=1e-2, max_iter=40)
    spec = SweepSpec(base, "p_o_mw", (5.0, 20.0), ("OPT-TS", "BRS-PS"), (0, 1))
    a, b = run_sweep(spec), run_sweep(spec)
    if a != b:
        return False, "reruns differ"
    rows = a.strip().splitlines()
    return len(rows) == 1 + 2 * 2 * 2, f"{len(rows) - 1} rows, byte-identical"


# -------------------------------------------------------------------- suite


def _suite(program_fn, theta_fn):
    rng = lambda k: np.random.default_rng(1000 + k)
    inst = Instance(NetworkScenario(), seed=0, program_fn=program_fn, theta_fn=theta_fn)
    small = Instance(NetworkScenario(), seed=1, eps=1e-3, max_iter=60, program_fn=program_fn, theta_fn=theta_fn)
    return [
        ("mat.eig_reconstruction", lambda: check_eig_reconstruction(rng(0))),
        ("mat.real_embed_psd", lambda: check_real_embed_psd(rng(1))),
        ("mat.inner_product", lambda: check_inner_product(rng(2))),
        ("conic.lambda_max_kkt", lambda: check_lambda_max(rng(3))),
        ("conic.determinism", lambda: check_solver_determinism(rng(4))),
        ("scenario.invariants", lambda: check_scenario_invariants(rng(5))),
        ("chance.dominance", lambda: check_chance_dominance(rng(6), count=150, trials=20_000)),
        ("chance.homogeneity", lambda: check_chance_homogeneity(rng(7))),
        ("polyblock.sandwich", lambda: check_polyblock_sandwich(rng(8))),
        ("ts.normality", lambda: check_ts_normality(inst, 100, rng(9))),
        ("ts.solution_feasible", lambda: check_ts_solution(inst)),
        ("ps.normality", lambda: check_ps_normality(inst, 100, rng(10))),
        ("ps.theta_rule", lambda: check_theta_rule(inst, 50, rng(11))),
        ("ps.recovery", lambda: check_ps_recovery(inst.ps, inst.scenario, inst.realization)),
        ("baselines.dominance", lambda: check_baselines(small)),
        ("cli.sweep_reproducible", check_sweep_reproducible),
    ]


def run_suite(only=None, program_fn=ps_program, theta_fn=theta_star) -> list[CheckResult]:
    """Run every check (or those whose name contains one of ``only``)."""
    out = []
    for name, fn in _suite(program_fn, theta_fn):
        if only and not any(o in name for o in only):
            continue
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as e:  # a crashing check is a failing check
            log.debug("check %s raised", name, exc_info=True)
            ok, detail = False, f"{type(e).__name__}: {e}"
        out.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t0))
    return out
