"""Dense primal-dual interior-point method for small LP/SDP cone programs.

Standard form (minimization)::

    minimize    c'x
    subject to  G_l x + s_l = h_l,          s_l >= 0
                h_j - sum_i x_i G_j[i] = S_j,  S_j psd   (one per PSD cone)
                A x = b

with dual ``maximize -h'z - b'y`` subject to ``G'z + A'y + c = 0``, ``z`` in the
dual cone.  The iteration runs on the homogeneous self-dual embedding so
infeasible and unbounded programs terminate with a certificate.  Scaling is
Nesterov-Todd, steps are Mehrotra predictor-corrector.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

log = logging.getLogger(__name__)

STEP_FRACTION = 0.99


@dataclass
class StandardForm:
    c: np.ndarray
    G_lp: np.ndarray  # (m_lp, n)
    h_lp: np.ndarray
    G_psd: list = field(default_factory=list)  # each (n, d, d), symmetric slices
    h_psd: list = field(default_factory=list)  # each (d, d)
    A: np.ndarray | None = None  # (p, n)
    b: np.ndarray | None = None

    def __post_init__(self):
        n = self.c.shape[0]
        if self.A is None:
            self.A = np.zeros((0, n))
            self.b = np.zeros(0)
        if self.G_lp.shape[1] != n or self.A.shape[1] != n:
            raise ValueError("column count mismatch in standard form")
        self.G_flat = [np.ascontiguousarray(g.reshape(n, -1)) for g in self.G_psd]

    @property
    def n(self) -> int:
        return self.c.shape[0]

    @property
    def degree(self) -> int:
        return self.G_lp.shape[0] + sum(h.shape[0] for h in self.h_psd)

    # cone-structured linear maps
    def G_apply(self, x):
        """Return (G_l x, [sum_i x_i G_j[i]])."""
        return self.G_lp @ x, [(x @ g).reshape(h.shape) for g, h in zip(self.G_flat, self.h_psd)]

    def G_adjoint(self, z_lp, z_psd):
        out = self.G_lp.T @ z_lp
        for g, zj in zip(self.G_flat, z_psd):
            out = out + g @ zj.ravel()
        return out

    def h_dot(self, z_lp, z_psd) -> float:
        return float(self.h_lp @ z_lp + sum(np.sum(h * zj) for h, zj in zip(self.h_psd, z_psd)))


@dataclass
class IpmResult:
    status: str
    x: np.ndarray
    y: np.ndarray
    z_lp: np.ndarray
    z_psd: list
    s_lp: np.ndarray
    s_psd: list
    iterations: int
    history: list  # per-iteration (pobj, dobj, pres, dres)


def _sym(m):
    return 0.5 * (m + m.T)


def _max_step_lp(v, dv):
    neg = dv < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-v[neg] / dv[neg]))


def _max_step_psd(lams, dmats):
    # max alpha with diag(lam) + alpha*dmat psd, for a stack of same-size cones
    isq = 1.0 / np.sqrt(lams)
    m = dmats * isq[:, :, None] * isq[:, None, :]
    w = np.linalg.eigvalsh(0.5 * (m + np.swapaxes(m, 1, 2)))[:, 0].min()
    return np.inf if w >= 0 else float(-1.0 / w)


def _groups(dims):
    """Cone indices grouped by matrix size so batched LAPACK calls can be used."""
    out = {}
    for j, d in enumerate(dims):
        out.setdefault(d, []).append(j)
    return [np.array(ix) for ix in out.values()]


class _Scaling:
    """Nesterov-Todd scaling at (s, z) for every cone."""

    def __init__(self, s_lp, z_lp, s_psd, z_psd, groups):
        self.w = np.sqrt(s_lp / z_lp)
        self.lam_lp = np.sqrt(s_lp * z_lp)
        k = len(s_psd)
        self.R, self.Rinv, self.lam_psd = [None] * k, [None] * k, [None] * k
        for ix in groups:
            ls = np.linalg.cholesky(np.stack([s_psd[j] for j in ix]))
            lz = np.linalg.cholesky(np.stack([z_psd[j] for j in ix]))
            _, sv, vt = np.linalg.svd(np.swapaxes(lz, 1, 2) @ ls)
            r = ls @ np.swapaxes(vt, 1, 2) / np.sqrt(sv)[:, None, :]
            rinv = np.linalg.inv(r)
            for a, j in enumerate(ix):
                self.R[j], self.Rinv[j], self.lam_psd[j] = r[a], rinv[a], sv[a]

    # W^{-T} applied to s-space quantities
    def scale_s(self, v_lp, v_psd):
        return v_lp / self.w, [ri @ v @ ri.T for ri, v in zip(self.Rinv, v_psd)]

    # W^{-1} applied to scaled z-quantities
    def unscale_z(self, v_lp, v_psd):
        return v_lp / self.w, [ri.T @ v @ ri for ri, v in zip(self.Rinv, v_psd)]

    # W^T applied to scaled s-quantities
    def unscale_s(self, v_lp, v_psd):
        return v_lp * self.w, [r @ v @ r.T for r, v in zip(self.R, v_psd)]


def _jordan_inv(lam_lp, lam_psd, r_lp, r_psd):
    """Solve lam o q = r for q (lam diagonal in the scaled frame)."""
    out = [2.0 * r / (lam[:, None] + lam[None, :]) for lam, r in zip(lam_psd, r_psd)]
    return r_lp / lam_lp, out


def _jordan(a_lp, a_psd, b_lp, b_psd):
    return a_lp * b_lp, [_sym(a @ b) for a, b in zip(a_psd, b_psd)]


class _KktSolver:
    """Factor [[H, A'], [A, 0]] once per iteration, solve for many right-hand sides."""

    def __init__(self, H, A):
        self.n = H.shape[0]
        self.p = A.shape[0]
        self.A = A
        self.mode = "chol"
        try:
            hr = H + A.T @ A if self.p else H
            self.Lh = sla.cho_factor(hr, lower=True)
            if self.p:
                hia = sla.cho_solve(self.Lh, A.T)
                self.Ls = sla.cho_factor(A @ hia, lower=True)
                self.hia = hia
        except (np.linalg.LinAlgError, sla.LinAlgError):
            self.mode = "lu"
            k = np.zeros((self.n + self.p, self.n + self.p))
            k[: self.n, : self.n] = H
            k[: self.n, self.n :] = A.T
            k[self.n :, : self.n] = A
            self.K = k
            with warnings.catch_warnings():
                # a singular factor shows up as a non-finite direction, handled by the caller
                warnings.simplefilter("ignore", sla.LinAlgWarning)
                self.lu = sla.lu_factor(k)

    def solve(self, r1, r2):
        """Solve H dx + A'dy = r1, A dx = r2."""
        if self.mode == "lu":
            sol = sla.lu_solve(self.lu, np.concatenate([r1, r2]))
            return sol[: self.n], sol[self.n :]
        if not self.p:
            return sla.cho_solve(self.Lh, r1), np.zeros(0)
        r1m = r1 + self.A.T @ r2
        t = sla.cho_solve(self.Lh, r1m)
        dy = sla.cho_solve(self.Ls, self.A @ t - r2)
        dx = t - self.hia @ dy
        return dx, dy


def solve_standard(sf: StandardForm, tol: float = 1e-7, max_iter: int = 100) -> IpmResult:
    n, p = sf.n, sf.A.shape[0]
    m_lp = sf.G_lp.shape[0]
    dims = [h.shape[0] for h in sf.h_psd]
    deg = sf.degree + 1
    groups = _groups(dims)

    x = np.zeros(n)
    y = np.zeros(p)
    s_lp, z_lp = np.ones(m_lp), np.ones(m_lp)
    s_psd = [np.eye(d) for d in dims]
    z_psd = [np.eye(d) for d in dims]
    tau = kappa = 1.0

    c, h_lp, b = sf.c, sf.h_lp, sf.b
    nc = max(1.0, np.max(np.abs(c), initial=0.0))
    nh = max(1.0, np.max(np.abs(h_lp), initial=0.0), *[np.max(np.abs(h)) for h in sf.h_psd], np.max(np.abs(b), initial=0.0))

    history = []
    best = None
    status = "max_iter"
    it = 0
    for it in range(max_iter + 1):
        gx_lp, gx_psd = sf.G_apply(x)
        rx = sf.A.T @ y + sf.G_adjoint(z_lp, z_psd) + c * tau
        ry = -(sf.A @ x) + b * tau
        rz_lp = s_lp + gx_lp - h_lp * tau
        rz_psd = [S + gx - h * tau for S, gx, h in zip(s_psd, gx_psd, sf.h_psd)]
        cx = float(c @ x)
        hz_by = sf.h_dot(z_lp, z_psd) + float(b @ y)
        rt = kappa + cx + hz_by
        sz = float(s_lp @ z_lp + sum(np.sum(S * Z) for S, Z in zip(s_psd, z_psd)))
        mu = (sz + tau * kappa) / deg

        pobj, dobj = cx / tau, -hz_by / tau
        pres = max(np.max(np.abs(ry), initial=0.0), np.max(np.abs(rz_lp), initial=0.0),
                   *[np.max(np.abs(r)) for r in rz_psd]) / tau / nh
        dres = np.max(np.abs(rx), initial=0.0) / tau / nc
        gap = max(abs(pobj - dobj), sz / tau**2)
        history.append((pobj, dobj, pres, dres))
        merit = max(pres, dres, gap / (1.0 + abs(pobj)))
        if best is None or merit < best[0]:
            best = (merit, x / tau, y / tau, z_lp / tau, [Z / tau for Z in z_psd],
                    s_lp / tau, [S / tau for S in s_psd])

        if pres <= tol and dres <= tol and gap <= tol * (1.0 + abs(pobj)):
            status = "optimal"
            break
        # infeasibility certificates (relative to the ray's own scale)
        if hz_by < 0:
            ray = -hz_by
            g_adj = sf.A.T @ y + sf.G_adjoint(z_lp, z_psd)
            if np.max(np.abs(g_adj)) / ray <= tol * nc and tau < 1e-2 * kappa:
                status = "infeasible"
                break
        if cx < 0:
            ray = -cx
            ax = sf.A @ x
            res = max(np.max(np.abs(ax), initial=0.0), np.max(np.abs(gx_lp + s_lp), initial=0.0),
                      *[np.max(np.abs(S + g)) for S, g in zip(s_psd, gx_psd)])
            if res / ray <= tol * nh and tau < 1e-2 * kappa:
                status = "unbounded"
                break
        if it == max_iter:
            break

        try:
            sc = _Scaling(s_lp, z_lp, s_psd, z_psd, groups)
        except np.linalg.LinAlgError:
            log.debug("scaling breakdown at iteration %d", it)
            break
        gh_lp = sf.G_lp / sc.w[:, None]
        gh_psd = [(ri @ g @ ri.T).reshape(n, -1) for ri, g in zip(sc.Rinv, sf.G_psd)]
        H = gh_lp.T @ gh_lp
        for gf in gh_psd:
            H = H + gf @ gf.T
        hh_lp, hh_psd = sc.scale_s(h_lp, sf.h_psd)
        rzh_lp, rzh_psd = sc.scale_s(rz_lp, rz_psd)
        try:
            kkt = _KktSolver(H, sf.A)
        except (np.linalg.LinAlgError, sla.LinAlgError, ValueError):
            log.debug("KKT factorization failed at iteration %d", it)
            break

        def gh_adj(v_lp, v_psd):
            out = gh_lp.T @ v_lp
            for g, v in zip(gh_psd, v_psd):
                out = out + g @ v.ravel()
            return out

        def gh_apply(v):
            return gh_lp @ v, [(v @ g).reshape(d, d) for g, d in zip(gh_psd, dims)]

        hh_dot = lambda v_lp, v_psd: float(hh_lp @ v_lp + sum(np.sum(h * v) for h, v in zip(hh_psd, v_psd)))
        ghh = gh_adj(hh_lp, hh_psd)
        hh_norm2 = hh_dot(hh_lp, hh_psd)

        lam_lp, lam_psd = sc.lam_lp, sc.lam_psd

        def direction(sigma, corr):
            d = 1.0 - sigma
            rc_lp = -lam_lp * lam_lp + sigma * mu
            rc_psd = [np.diag(-lam * lam + sigma * mu) for lam in lam_psd]
            rck = -tau * kappa + sigma * mu
            if corr is not None:
                rc_lp = rc_lp - corr[0]
                rc_psd = [r - cr for r, cr in zip(rc_psd, corr[1])]
                rck -= corr[2]
            q_lp, q_psd = _jordan_inv(lam_lp, lam_psd, rc_lp, rc_psd)
            w_lp = q_lp + d * rzh_lp
            w_psd = [q + d * r for q, r in zip(q_psd, rzh_psd)]
            r1 = -d * rx - gh_adj(w_lp, w_psd)
            ux, uy = kkt.solve(r1, d * ry)
            return ux, uy, w_lp, w_psd, q_lp, q_psd, rck, d

        def finish(parts):
            ux, uy, w_lp, w_psd, q_lp, q_psd, rck, d = parts
            # third equation: (c + ghh)'dx + b'dy - (hh'hh + kappa/tau) dtau = rhs3
            rhs3 = -d * rt - rck / tau - hh_dot(w_lp, w_psd)
            a0 = float((c + ghh) @ ux + b @ uy)
            a1 = float((c + ghh) @ vx2 + b @ vy2)
            denom = a1 + hh_norm2 + kappa / tau
            dtau = (a0 - rhs3) / denom
            dx = ux - vx2 * dtau
            dy = uy - vy2 * dtau
            gdx_lp, gdx_psd = gh_apply(dx)
            zh_lp = gdx_lp - hh_lp * dtau + w_lp
            zh_psd = [g - h * dtau + w for g, h, w in zip(gdx_psd, hh_psd, w_psd)]
            sh_lp = q_lp - zh_lp
            sh_psd = [_sym(q - zz) for q, zz in zip(q_psd, zh_psd)]
            zh_psd = [_sym(zz) for zz in zh_psd]
            dkappa = (rck - kappa * dtau) / tau
            return dx, dy, dtau, dkappa, sh_lp, sh_psd, zh_lp, zh_psd

        try:
            # dx = ux - dtau*vx2, dy = uy - dtau*vy2
            vx2, vy2 = kkt.solve(c - ghh, -b)

            def step_len(dd):
                dx, dy, dtau, dkappa, sh_lp, sh_psd, zh_lp, zh_psd = dd
                a = np.inf
                if m_lp:
                    a = min(a, _max_step_lp(lam_lp, sh_lp), _max_step_lp(lam_lp, zh_lp))
                for ix in groups:
                    lams = np.stack([lam_psd[j] for j in ix] * 2)
                    mats = np.stack([sh_psd[j] for j in ix] + [zh_psd[j] for j in ix])
                    a = min(a, _max_step_psd(lams, mats))
                if dtau < 0:
                    a = min(a, -tau / dtau)
                if dkappa < 0:
                    a = min(a, -kappa / dkappa)
                return a

            aff = finish(direction(0.0, None))
            a_aff = min(1.0, step_len(aff))
            sigma = (1.0 - a_aff) ** 3
            _, _, dtau_a, dkappa_a, sh_a_lp, sh_a_psd, zh_a_lp, zh_a_psd = aff
            corr_lp, corr_psd = _jordan(sh_a_lp, sh_a_psd, zh_a_lp, zh_a_psd)
            comb = finish(direction(sigma, (corr_lp, corr_psd, dtau_a * dkappa_a)))
            alpha = min(1.0, STEP_FRACTION * step_len(comb))
            dx, dy, dtau, dkappa, sh_lp, sh_psd, zh_lp, zh_psd = comb
            if not (np.isfinite(alpha) and np.all(np.isfinite(dx)) and np.isfinite(dtau)):
                raise FloatingPointError("non-finite search direction")
        except (ValueError, FloatingPointError, np.linalg.LinAlgError, sla.LinAlgError) as e:
            log.debug("numerical breakdown at iteration %d: %s", it, e)
            break
        ds_lp, ds_psd = sc.unscale_s(sh_lp, sh_psd)
        dz_lp, dz_psd = sc.unscale_z(zh_lp, zh_psd)
        x = x + alpha * dx
        y = y + alpha * dy
        tau += alpha * dtau
        kappa += alpha * dkappa
        s_lp = s_lp + alpha * ds_lp
        z_lp = z_lp + alpha * dz_lp
        s_psd = [_sym(S + alpha * d) for S, d in zip(s_psd, ds_psd)]
        z_psd = [_sym(Z + alpha * d) for Z, d in zip(z_psd, dz_psd)]
        if not np.isfinite(tau) or tau <= 0 or not np.all(np.isfinite(x)):
            break

    if status == "optimal":
        return IpmResult(status, x / tau, y / tau, z_lp / tau, [Z / tau for Z in z_psd],
                         s_lp / tau, [S / tau for S in s_psd], it, history)
    if status == "infeasible":
        scale = -(sf.h_dot(z_lp, z_psd) + float(b @ y))
        return IpmResult(status, np.full(n, np.nan), y / scale, z_lp / scale, [Z / scale for Z in z_psd],
                         np.full(m_lp, np.nan), [np.full_like(S, np.nan) for S in s_psd], it, history)
    if status == "unbounded":
        scale = -float(c @ x)
        return IpmResult(status, x / scale, np.full(p, np.nan), np.full(m_lp, np.nan),
                         [np.full_like(Z, np.nan) for Z in z_psd], s_lp / scale,
                         [S / scale for S in s_psd], it, history)
    _, bx, by, bzl, bzp, bsl, bsp = best
    return IpmResult("max_iter", bx, by, bzl, bzp, bsl, bsp, it, history)
