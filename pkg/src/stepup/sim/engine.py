"""Batched planar dynamics of the wheeled biped.

The equations of motion are assembled from closed-form CoM Jacobians of the
fixed kinematic tree:

    M(q) qdd = Q_actuation + Q_contact + sum_b m_b J_b^T (g - a0_b)

with M = sum_b (m_b J_b^T J_b + I_b s_b s_b^T), a0_b the centripetal CoM
acceleration at qdd = 0, and s_b the constant rotational selector of body b.
This is exact for the rigid tree and vectorizes over environments (leading
axis N everywhere). Integration is semi-implicit Euler.

Wheel-terrain contact: one contact per wheel at the closest point of the
terrain polyline. The normal force is a spring-damper penalty; the
tangential force is a velocity-level impulse clamped to the Coulomb cone
(exact stick inside the cone, |f_t| = mu f_n when sliding), which keeps the
stiff tangential direction unconditionally stable at the 200 Hz substep.
"""

import numpy as np

from .model import (
    ActuatorCommand,
    ContactPoint,
    NumericalDivergence,
    RobotModel,
    RobotState,
    NQ,
    Q_LEGS,
    Q_PITCH,
    Q_WHEELS,
    Q_X,
    Q_Z,
)

# body order: base, upperL, lowerL, wheelL, upperR, lowerR, wheelR
_LEG_COLS = ((3, 4, 5), (6, 7, 8))   # (hip, knee, wheel) per leg


def _perp(v):
    """90 degree counterclockwise rotation of (..., 2) vectors."""
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def _cross2(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _rot(theta, v):
    """Rotate constant vector v by per-env angles theta."""
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([c * v[0] - s * v[1], s * v[0] + c * v[1]], axis=-1)


def _link_dir(phi):
    """World direction of a link that points down (-z) at zero angle."""
    return np.stack([np.sin(phi), -np.cos(phi)], axis=-1)


class PlanarEngine:
    """Vectorized simulator for N independent robots sharing one model."""

    def __init__(self, model: RobotModel, dt=0.005, gravity=9.81,
                 contact_stiffness=20000.0, contact_damping=200.0):
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        self.model = model
        self.dt = float(dt)
        self.gravity = float(gravity)
        self.k_normal = float(contact_stiffness)
        self.c_normal = float(contact_damping)

        m = model
        self.body_mass = np.array([
            m.base_mass,
            m.upper_mass, m.lower_mass, m.wheel_mass,
            m.upper_mass, m.lower_mass, m.wheel_mass,
        ])
        self._mass_rows = np.repeat(self.body_mass, 2)
        # constant rotational part of the mass matrix: sum_b I_b s_b s_b^T
        inertias = [m.base_inertia,
                    m.upper_inertia, m.lower_inertia, m.wheel_inertia,
                    m.upper_inertia, m.lower_inertia, m.wheel_inertia]
        selectors = [(Q_PITCH,)]
        for hip, knee, wheel in _LEG_COLS:
            selectors += [(Q_PITCH, hip), (Q_PITCH, hip, knee),
                          (Q_PITCH, hip, knee, wheel)]
        self._rot_inertia = np.zeros((NQ, NQ))
        for inertia, cols in zip(inertias, selectors):
            s = np.zeros(NQ)
            s[list(cols)] = 1.0
            self._rot_inertia += inertia * np.outer(s, s)

    # -- kinematics ---------------------------------------------------------

    def fk(self, q):
        """World positions of pins, wheel axles and body CoMs; q is (N, 9)."""
        m = self.model
        theta = q[:, Q_PITCH]
        p_base = q[:, [Q_X, Q_Z]]
        p_hip = p_base + _rot(theta, m.hip_offset)

        phi_u = theta[:, None] + q[:, [3, 6]]
        phi_l = phi_u + q[:, [4, 7]]
        d_u = _link_dir(phi_u)                     # (N, 2 legs, 2)
        d_l = _link_dir(phi_l)
        p_knee = p_hip[:, None, :] + m.upper_length * d_u
        p_wheel = p_knee + m.lower_length * d_l

        coms = np.empty(q.shape[:1] + (7, 2))
        coms[:, 0] = p_base + _rot(theta, m.base_com_offset)
        for leg in range(2):
            coms[:, 1 + 3 * leg] = p_hip + 0.5 * m.upper_length * d_u[:, leg]
            coms[:, 2 + 3 * leg] = p_knee[:, leg] + 0.5 * m.lower_length * d_l[:, leg]
            coms[:, 3 + 3 * leg] = p_wheel[:, leg]
        return dict(p_base=p_base, p_hip=p_hip, p_knee=p_knee, p_wheel=p_wheel,
                    d_u=d_u, d_l=d_l, phi_u=phi_u, phi_l=phi_l, coms=coms,
                    theta=theta)

    def com_jacobians(self, q, f=None):
        """(N, 7, 2, 9) velocity Jacobians of every body CoM."""
        f = f or self.fk(q)
        n = q.shape[0]
        J = np.zeros((n, 7, 2, 9))
        J[:, :, 0, Q_X] = 1.0
        J[:, :, 1, Q_Z] = 1.0
        J[:, :, :, Q_PITCH] = _perp(f["coms"] - f["p_base"][:, None, :])
        for leg, (hip, knee, _) in enumerate(_LEG_COLS):
            for body in (1 + 3 * leg, 2 + 3 * leg, 3 + 3 * leg):
                J[:, body, :, hip] = _perp(f["coms"][:, body] - f["p_hip"])
            for body in (2 + 3 * leg, 3 + 3 * leg):
                J[:, body, :, knee] = _perp(f["coms"][:, body] - f["p_knee"][:, leg])
        return J

    def com(self, q):
        f = self.fk(q)
        return (self.body_mass[None, :, None] * f["coms"]).sum(axis=1) / self.body_mass.sum()

    def com_velocity(self, q, qd):
        J = self.com_jacobians(q)
        v = np.einsum("nbcj,nj->nbc", J, qd)
        return (self.body_mass[None, :, None] * v).sum(axis=1) / self.body_mass.sum()

    # -- dynamics -----------------------------------------------------------

    def mass_matrix(self, q, J=None):
        J = J if J is not None else self.com_jacobians(q)
        n = q.shape[0]
        J2 = J.reshape(n, 14, NQ)
        Jm = J2 * self._mass_rows[None, :, None]
        return J2.transpose(0, 2, 1) @ Jm + self._rot_inertia[None]

    def _centripetal(self, q, qd, f):
        """CoM accelerations at qdd = 0 (centripetal terms only)."""
        m = self.model
        theta_d = qd[:, Q_PITCH]
        w_u = theta_d[:, None] + qd[:, [3, 6]]     # upper link angular rates
        w_l = w_u + qd[:, [4, 7]]

        a = np.zeros(q.shape[:1] + (7, 2))
        hip_term = -theta_d[:, None] ** 2 * _rot(f["theta"], m.hip_offset)
        a[:, 0] = -theta_d[:, None] ** 2 * _rot(f["theta"], m.base_com_offset)
        for leg in range(2):
            seg_u = w_u[:, leg, None] ** 2 * f["d_u"][:, leg]
            seg_l = w_l[:, leg, None] ** 2 * f["d_l"][:, leg]
            a[:, 1 + 3 * leg] = hip_term - 0.5 * m.upper_length * seg_u
            a[:, 2 + 3 * leg] = hip_term - m.upper_length * seg_u - 0.5 * m.lower_length * seg_l
            a[:, 3 + 3 * leg] = hip_term - m.upper_length * seg_u - m.lower_length * seg_l
        return a

    def gravity_bias_forces(self, q, qd, f=None, J=None):
        """Generalized force sum_b m_b J_b^T (g - a0_b)."""
        f = f or self.fk(q)
        J = J if J is not None else self.com_jacobians(q, f)
        n = q.shape[0]
        g = np.array([0.0, -self.gravity])
        rhs = g[None, None, :] - self._centripetal(q, qd, f)
        J2 = J.reshape(n, 14, NQ)
        rhs2 = rhs.reshape(n, 14, 1) * self._mass_rows[None, :, None]
        return (J2.transpose(0, 2, 1) @ rhs2)[..., 0]

    def pd_torques(self, q, qd, leg_targets, wheel_targets):
        """Joint-space actuation (N, 9); base columns stay zero."""
        m = self.model
        tau = np.zeros_like(q)
        targets = np.clip(leg_targets, m.joint_lower, m.joint_upper)
        tau_leg = m.kp * (targets - q[:, Q_LEGS]) - m.kd * qd[:, Q_LEGS]
        tau[:, Q_LEGS] = np.clip(tau_leg, -m.torque_limit_leg, m.torque_limit_leg)
        tau_wheel = m.kv * (wheel_targets - qd[:, Q_WHEELS])
        tau[:, Q_WHEELS] = np.clip(tau_wheel, -m.torque_limit_wheel, m.torque_limit_wheel)
        return tau

    # -- contact ------------------------------------------------------------

    # vertex window wide enough for the wheel footprint plus inserted step
    # corners and bucket-rounding slack at the 0.05 m sample spacing
    _WINDOW = 16

    @staticmethod
    def build_poly_bucket(poly, dx=0.05):
        """O(1) window-lookup table for `_contact_geometry`.

        Returns (x0, dx, table) where table[n, b] is the index of the first
        vertex of polyline n with x >= x0 + b * dx.
        """
        x0 = float(poly[:, 0, 0].min())
        x1 = float(poly[:, -1, 0].max())
        n_buckets = int(np.ceil((x1 - x0) / dx)) + 2
        bucket_x = x0 + dx * np.arange(n_buckets)
        table = np.empty((poly.shape[0], n_buckets), dtype=np.int64)
        for n in range(poly.shape[0]):
            table[n] = np.searchsorted(poly[n, :, 0], bucket_x)
        return x0, dx, table

    def _contact_geometry(self, f, poly, floor_fn=None, bucket=None):
        """Closest-point wheel-vs-polyline queries.

        Only segments inside an x-window around each wheel are tested (any
        contact point lies within one radius of the centre). Returns
        per-wheel arrays: point (N, 2, 2), normal (N, 2, 2), penetration
        (N, 2) and contact mask (N, 2).
        """
        r = self.model.wheel_radius
        n_env, n_verts = poly.shape[:2]
        K = min(self._WINDOW, n_verts - 1)
        # both wheels in one pass: leading axis is wheel-major (2N,)
        c = f["p_wheel"].transpose(1, 0, 2).reshape(2 * n_env, 2)
        rows = np.tile(np.arange(n_env), 2)
        target = c[:, 0] - (r + 0.05)

        if bucket is not None:
            bx0, bdx, table = bucket
            bi = np.clip(((target - bx0) / bdx).astype(np.int64), 0,
                         table.shape[1] - 1)
            lo = table[rows, bi]
        else:
            poly_x = np.ascontiguousarray(poly[:, :, 0])
            lo = np.zeros(2 * n_env, dtype=np.int64)
            hi = np.full(2 * n_env, n_verts, dtype=np.int64)
            for _ in range(int(np.ceil(np.log2(n_verts))) + 1):
                mid = (lo + hi) // 2
                go_right = poly_x[rows, np.minimum(mid, n_verts - 1)] < target
                lo = np.where(go_right, mid + 1, lo)
                hi = np.where(go_right, hi, mid)
        start = np.clip(lo - 1, 0, n_verts - 1 - K)

        vidx = start[:, None] + np.arange(K + 1)[None, :]
        verts = poly[rows[:, None], vidx]
        p0 = verts[:, :-1, :]
        seg = verts[:, 1:, :] - p0
        seg_len2 = np.maximum((seg * seg).sum(-1), 1e-12)

        rel = c[:, None, :] - p0
        t = np.clip((rel * seg).sum(-1) / seg_len2, 0.0, 1.0)
        cp = p0 + t[..., None] * seg
        dist2 = ((c[:, None, :] - cp) ** 2).sum(-1)
        j = np.argmin(dist2, axis=1)
        point = cp[np.arange(2 * n_env), j]
        delta = c - point
        dist = np.sqrt(np.maximum(dist2[np.arange(2 * n_env), j], 0.0))

        normal = np.where(dist[:, None] > 1e-9,
                          delta / np.maximum(dist[:, None], 1e-9),
                          np.array([0.0, 1.0]))
        pen = r - dist
        if floor_fn is not None:
            # wheel centre under the terrain graph: push straight up
            floor = floor_fn(c[:, 0].reshape(2, n_env).T).T.reshape(2 * n_env)
            buried = c[:, 1] < floor
            if np.any(buried):
                normal[buried] = (0.0, 1.0)
                pen = np.where(buried, r + floor - c[:, 1], pen)
                point = np.where(buried[:, None],
                                 np.stack([c[:, 0], floor], axis=-1), point)

        def unpack(a):
            return a.reshape((2, n_env) + a.shape[1:]).swapaxes(0, 1)

        pens = unpack(pen)
        return dict(point=unpack(point), normal=unpack(normal),
                    penetration=pens, contact=pens > 0.0)

    def _point_jacobian_row(self, f, point, direction, leg):
        """(N, 9) row d(v_contact . direction)/d(qd) for the given wheel."""
        hip, knee, wheel = _LEG_COLS[leg]
        row = np.zeros(point.shape[:1] + (NQ,))
        row[:, Q_X] = direction[:, 0]
        row[:, Q_Z] = direction[:, 1]
        row[:, Q_PITCH] = _cross2(point - f["p_base"], direction)
        row[:, hip] = _cross2(point - f["p_hip"], direction)
        row[:, knee] = _cross2(point - f["p_knee"][:, leg], direction)
        row[:, wheel] = _cross2(point - f["p_wheel"][:, leg], direction)
        return row

    def _normal_forces(self, geom, qd, f, J):
        """Spring-damper normal magnitudes (N, 2), zero outside contact."""
        fn = np.zeros(qd.shape[:1] + (2,))
        for leg in range(2):
            vc = np.einsum("ncj,nj->nc", J[:, 3 + 3 * leg], qd)
            approach = (vc * geom["normal"][:, leg]).sum(-1)
            raw = self.k_normal * geom["penetration"][:, leg] - self.c_normal * approach
            fn[:, leg] = np.where(geom["contact"][:, leg], np.maximum(0.0, raw), 0.0)
        return fn

    def _generalized_force(self, f, point, force, leg):
        """Map a world force at a wheel contact point to joint space."""
        hip, knee, wheel = _LEG_COLS[leg]
        Q = np.zeros(point.shape[:1] + (NQ,))
        Q[:, Q_X] = force[:, 0]
        Q[:, Q_Z] = force[:, 1]
        Q[:, Q_PITCH] = _cross2(point - f["p_base"], force)
        Q[:, hip] = _cross2(point - f["p_hip"], force)
        Q[:, knee] = _cross2(point - f["p_knee"][:, leg], force)
        Q[:, wheel] = _cross2(point - f["p_wheel"][:, leg], force)
        return Q

    @staticmethod
    def _friction_qp(A, b, beta):
        """Tangential impulses for both wheels by maximum dissipation.

        Minimizes 0.5 p^T A p - p^T b over the box |p_i| <= beta_i, by
        enumerating the unconstrained optimum and the four box faces. Exact
        and order-free, so mirror-symmetric states produce mirror-symmetric
        impulses (a sequential solve would not).
        """
        A00, A01, A11 = A[:, 0, 0], A[:, 0, 1], A[:, 1, 1]
        b0, b1 = b[:, 0], b[:, 1]
        beta0, beta1 = beta[:, 0], beta[:, 1]

        det = A00 * A11 - A01 * A01
        safe_det = np.where(np.abs(det) > 1e-12 * np.maximum(A00 * A11, 1e-12), det, 1.0)
        pu0 = (b0 * A11 - A01 * b1) / safe_det
        pu1 = (A00 * b1 - A01 * b0) / safe_det
        feasible = ((np.abs(pu0) <= beta0 + 1e-12) & (np.abs(pu1) <= beta1 + 1e-12)
                    & (np.abs(det) > 1e-12 * np.maximum(A00 * A11, 1e-12)))

        cand = np.empty(A.shape[:1] + (5, 2))
        cand[:, 0, 0], cand[:, 0, 1] = pu0, pu1
        for k, s in ((1, 1.0), (2, -1.0)):
            p0 = s * beta0
            cand[:, k, 0] = p0
            cand[:, k, 1] = np.clip((b1 - A01 * p0) / np.maximum(A11, 1e-12), -beta1, beta1)
        for k, s in ((3, 1.0), (4, -1.0)):
            p1 = s * beta1
            cand[:, k, 1] = p1
            cand[:, k, 0] = np.clip((b0 - A01 * p1) / np.maximum(A00, 1e-12), -beta0, beta0)

        c0, c1 = cand[..., 0], cand[..., 1]
        energy = (0.5 * (A00[:, None] * c0 ** 2 + A11[:, None] * c1 ** 2)
                  + A01[:, None] * c0 * c1 - c0 * b0[:, None] - c1 * b1[:, None])
        energy[:, 0] = np.where(feasible, energy[:, 0], np.inf)
        best = np.argmin(energy, axis=1)
        return cand[np.arange(len(best)), best]

    def resolve_contacts_batch(self, q, qd, poly, mu, floor_fn=None,
                               leg_targets=None, wheel_targets=None, bucket=None):
        """Contact forces for the current state against per-env polylines.

        poly: (N, V, 2) surface vertices; mu: (N,) friction; floor_fn maps
        wheel x (N, 2) to terrain height for the anti-tunnel fallback.
        Tangential forces are what one substep would apply (coasting unless
        actuation targets are given).
        """
        f = self.fk(q)
        J = self.com_jacobians(q, f)
        if leg_targets is None:
            tau = np.zeros_like(q)
        else:
            tau = self.pd_torques(q, qd, leg_targets, wheel_targets)
        _, _, info = self._forces_and_velocity(q, qd, tau, poly, mu, floor_fn, f, J,
                                               bucket=bucket)
        return info

    def _forces_and_velocity(self, q, qd, tau, poly, mu, floor_fn, f, J, bucket=None):
        """Shared force pipeline; returns (qd_next, M, contact info)."""
        geom = self._contact_geometry(f, poly, floor_fn, bucket)
        fn = self._normal_forces(geom, qd, f, J)
        rhs = tau + self.gravity_bias_forces(q, qd, f, J)
        for leg in range(2):
            normal_force = fn[:, leg, None] * geom["normal"][:, leg]
            rhs += self._generalized_force(f, geom["point"][:, leg], normal_force, leg)
        M = self.mass_matrix(q, J)

        tangent = np.stack([_perp(geom["normal"][:, leg]) for leg in range(2)], axis=1)
        J_t = np.stack([
            self._point_jacobian_row(f, geom["point"][:, leg], tangent[:, leg], leg)
            for leg in range(2)], axis=1)                      # (N, 2, 9)

        # one factorization: free-velocity column + both contact directions
        stacked = np.concatenate([self.dt * rhs[..., None],
                                  J_t.transpose(0, 2, 1)], axis=2)
        sol = np.linalg.solve(M, stacked)
        qd_free = qd + sol[..., 0]
        w = sol[..., 1:]                                       # (N, 9, 2) = M^-1 J_t^T

        slip = np.einsum("nwj,nj->nw", J_t, qd_free)
        A = J_t @ w                                            # (N, 2, 2)
        beta = mu[:, None] * fn * self.dt
        p = self._friction_qp(A, -slip, beta)
        qd_next = qd_free + np.einsum("njw,nw->nj", w, p)
        ft = p / self.dt

        force = fn[..., None] * geom["normal"] + ft[..., None] * tangent
        info = dict(
            normal_force=fn, tangential_force=ft,
            penetration=np.where(geom["contact"], geom["penetration"], 0.0),
            contact=geom["contact"], point=geom["point"], normal=geom["normal"],
            force=force, torque=tau,
        )
        return qd_next, M, info

    # -- integration --------------------------------------------------------

    def substep(self, q, qd, leg_targets, wheel_targets, poly, mu, floor_fn=None,
                bucket=None):
        """One semi-implicit Euler step; returns (q', qd', info, diverged)."""
        m = self.model
        with np.errstate(over="ignore", invalid="ignore"):
            # non-finite values flow through and are caught by the diverged mask
            f = self.fk(q)
            J = self.com_jacobians(q, f)
            tau = self.pd_torques(q, qd, leg_targets, wheel_targets)
            qd2, _, info = self._forces_and_velocity(q, qd, tau, poly, mu,
                                                     floor_fn, f, J, bucket=bucket)
            q2 = q + self.dt * qd2

        lo, hi = m.joint_lower, m.joint_upper
        at_lo = q2[:, Q_LEGS] < lo
        at_hi = q2[:, Q_LEGS] > hi
        q2[:, Q_LEGS] = np.clip(q2[:, Q_LEGS], lo, hi)
        qd2[:, Q_LEGS] = np.where(at_lo, np.maximum(qd2[:, Q_LEGS], 0.0), qd2[:, Q_LEGS])
        qd2[:, Q_LEGS] = np.where(at_hi, np.minimum(qd2[:, Q_LEGS], 0.0), qd2[:, Q_LEGS])
        q2[:, Q_WHEELS] = np.mod(q2[:, Q_WHEELS] + np.pi, 2 * np.pi) - np.pi

        diverged = ~(np.isfinite(q2).all(axis=1) & np.isfinite(qd2).all(axis=1))
        if np.any(diverged):
            q2[diverged] = q[diverged]
            qd2[diverged] = 0.0
        return q2, qd2, info, diverged

    def static_equilibrium(self, ground_z=0.0, pose=None):
        """Symmetric rest state on flat ground at the commanded pose.

        Solves for (base z, pitch, hip, knee) where PD torques, gravity and
        the contact springs balance; the base pitch absorbs PD sag so the
        CoM sits over the wheel contacts. Returns a single q vector (9,).
        """
        m = self.model
        pose = m.default_pose if pose is None else np.asarray(pose, dtype=float)
        pose_batch = pose[None]
        wheel0 = np.zeros((1, 2))
        qd0 = np.zeros((1, NQ))

        def build(u):
            q = np.zeros((1, NQ))
            q[0, Q_Z] = u[0]
            q[0, Q_PITCH] = u[1]
            q[0, [3, 6]] = u[2]
            q[0, [4, 7]] = u[3]
            return q

        def residual(u):
            q = build(u)
            f = self.fk(q)
            rhs = (self.pd_torques(q, qd0, pose_batch, wheel0)
                   + self.gravity_bias_forces(q, qd0, f=f))
            pen = ground_z + m.wheel_radius - f["p_wheel"][:, :, 1]
            fn = self.k_normal * np.maximum(pen, 0.0)
            for leg in range(2):
                force = np.stack([np.zeros(1), fn[:, leg]], axis=-1)
                rhs += self._generalized_force(f, f["p_wheel"][:, leg], force, leg)
            return rhs[0, [Q_Z, Q_PITCH, 3, 4]]

        sag = self.model.total_mass * self.gravity / (2 * self.k_normal)
        u = np.array([ground_z + self.model.standing_height(pose) - sag, 0.0,
                      pose[0], pose[1]])
        for _ in range(80):
            r = residual(u)
            if np.abs(r).max() < 1e-9:
                break
            jac = np.empty((4, 4))
            h = 1e-7
            for j in range(4):
                du = u.copy()
                du[j] += h
                jac[:, j] = (residual(du) - r) / h
            step = np.linalg.lstsq(jac, r, rcond=None)[0]
            u = u - np.clip(step, -0.2, 0.2)
        return build(u)[0]

    def energy(self, q, qd, ground_z=0.0):
        """Kinetic + gravitational potential energy per env."""
        f = self.fk(q)
        M = self.mass_matrix(q)
        kinetic = 0.5 * np.einsum("ni,nij,nj->n", qd, M, qd)
        heights = f["coms"][..., 1] - ground_z
        potential = self.gravity * (self.body_mass[None] * heights).sum(axis=1)
        return kinetic + potential


# -- single-robot operations (N = 1 views over the batched engine) ----------

def pd_torque(model: RobotModel, state: RobotState, cmd: ActuatorCommand) -> np.ndarray:
    """Actuator torques [hipL, kneeL, hipR, kneeR, wheelL, wheelR]."""
    engine = PlanarEngine(model)
    q, qd = state.as_q()
    tau = engine.pd_torques(q[None], qd[None], cmd.leg_targets[None],
                            cmd.wheel_targets[None])[0]
    return np.concatenate([tau[Q_LEGS], tau[Q_WHEELS]])


def _terrain_hooks(field):
    from .. import terrain as _terrain
    poly = _terrain.contact_polyline(field)[None]
    floor_fn = lambda x: _terrain._height_clamped(field, x)
    return poly, floor_fn


def resolve_contacts(model: RobotModel, state: RobotState, field) -> list[ContactPoint]:
    """Contact points for wheels penetrating the terrain (possibly empty)."""
    engine = PlanarEngine(model)
    q, qd = state.as_q()
    poly, floor_fn = _terrain_hooks(field)
    info = engine.resolve_contacts_batch(q[None], qd[None], poly,
                                         np.array([field.friction]), floor_fn)
    points = []
    for w in range(2):
        if info["contact"][0, w]:
            points.append(ContactPoint(
                wheel_index=w,
                location=info["point"][0, w].copy(),
                normal_force=float(info["normal_force"][0, w]),
                tangential_force=float(info["tangential_force"][0, w]),
                penetration=float(info["penetration"][0, w]),
                normal=info["normal"][0, w].copy(),
            ))
    return points


def step_physics(model: RobotModel, state: RobotState, cmd: ActuatorCommand,
                 field, dt: float) -> RobotState:
    """Advance one physics substep; raises NumericalDivergence on blow-up."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    engine = PlanarEngine(model, dt=dt)
    q, qd = state.as_q()
    poly, floor_fn = _terrain_hooks(field)
    q2, qd2, _, diverged = engine.substep(
        q[None], qd[None], cmd.leg_targets[None], cmd.wheel_targets[None],
        poly, np.array([field.friction]), floor_fn)
    if diverged[0]:
        raise NumericalDivergence("robot state became non-finite")
    return RobotState.from_q(q2[0], qd2[0])


def apply_push(state: RobotState, push_velocity: float, direction) -> RobotState:
    """Overwrite the base linear velocity with push_velocity * direction."""
    if not 0.0 <= push_velocity <= 0.5:
        raise ValueError(f"push velocity {push_velocity} outside [0, 0.5]")
    direction = np.asarray(direction, dtype=float)
    q, qd = state.as_q()
    qd[[Q_X, Q_Z]] = push_velocity * direction
    return RobotState.from_q(q, qd)
