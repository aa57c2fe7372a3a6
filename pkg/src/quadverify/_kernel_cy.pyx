# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled closed-loop rollout kernel.

Mirrors _kernel_py.run_closed_loop operation for operation; the main loop is
nogil so independent rollouts can run on a thread pool.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, exp, isfinite, sin, sqrt

cnp.import_array()

BACKEND_NAME = "cython"

# --- parameter / log layout, kept in sync with quadverify.packing ---
cdef enum:
    P_M0 = 0
    P_JX = 1
    P_G = 4
    P_FMAX = 5
    P_KP = 6
    P_KV = 9
    P_KR = 12
    P_KOM = 15
    P_REF = 18
    P_MASS_A = 22
    P_MASS_OM = 23
    P_MASS_PH = 24
    P_TAU = 25
    P_ASV = 26
    P_ASOM = 29
    P_WCF = 32
    P_WCM = 33
    P_TS = 34
    P_SATF = 35
    P_SATM = 36
    P_DT = 37

cdef enum:
    REF_HOVER = 0
    REF_CIRCLE = 1
    REF_FIG8 = 2

cdef enum:
    C_T = 0
    C_P = 1
    C_V = 4
    C_R = 7
    C_OM = 16
    C_M = 19
    C_FCMD = 20
    C_MCMD = 21
    C_FAPP = 24
    C_MAPP = 25
    C_UL1 = 28
    NCOL = 32

cdef double FD_H = 1e-4
cdef double FORCE_EPS = 1e-6
cdef double TWO_PI = 6.283185307179586476925286766559
cdef double DIVERGENCE_RADIUS = 1e3


cdef inline void mat_vec(const double* A, const double* x, double* y) noexcept nogil:
    cdef int i
    for i in range(3):
        y[i] = A[3 * i] * x[0] + A[3 * i + 1] * x[1] + A[3 * i + 2] * x[2]


cdef inline void mat_tvec(const double* A, const double* x, double* y) noexcept nogil:
    cdef int i
    for i in range(3):
        y[i] = A[i] * x[0] + A[3 + i] * x[1] + A[6 + i] * x[2]


cdef inline void mat_mul(const double* A, const double* B, double* C) noexcept nogil:
    cdef int i, j
    for i in range(3):
        for j in range(3):
            C[3 * i + j] = (A[3 * i] * B[j] + A[3 * i + 1] * B[3 + j]
                            + A[3 * i + 2] * B[6 + j])


cdef inline void mat_tmul(const double* A, const double* B, double* C) noexcept nogil:
    # C = A^T B
    cdef int i, j
    for i in range(3):
        for j in range(3):
            C[3 * i + j] = A[i] * B[j] + A[3 + i] * B[3 + j] + A[6 + i] * B[6 + j]


cdef inline void cross(const double* a, const double* b, double* c) noexcept nogil:
    c[0] = a[1] * b[2] - a[2] * b[1]
    c[1] = a[2] * b[0] - a[0] * b[2]
    c[2] = a[0] * b[1] - a[1] * b[0]


cdef inline int inv3(const double* A, double* B) noexcept nogil:
    # adjugate inverse; returns nonzero if singular
    cdef double d = (A[0] * (A[4] * A[8] - A[5] * A[7])
                     - A[1] * (A[3] * A[8] - A[5] * A[6])
                     + A[2] * (A[3] * A[7] - A[4] * A[6]))
    if d == 0.0 or not isfinite(d):
        return 1
    cdef double inv = 1.0 / d
    B[0] = (A[4] * A[8] - A[5] * A[7]) * inv
    B[1] = (A[2] * A[7] - A[1] * A[8]) * inv
    B[2] = (A[1] * A[5] - A[2] * A[4]) * inv
    B[3] = (A[5] * A[6] - A[3] * A[8]) * inv
    B[4] = (A[0] * A[8] - A[2] * A[6]) * inv
    B[5] = (A[2] * A[3] - A[0] * A[5]) * inv
    B[6] = (A[3] * A[7] - A[4] * A[6]) * inv
    B[7] = (A[1] * A[6] - A[0] * A[7]) * inv
    B[8] = (A[0] * A[4] - A[1] * A[3]) * inv
    return 0


cdef int polar_project(double* R) noexcept nogil:
    # nearest rotation via iterated averaging X <- (X + X^-T)/2
    cdef double X[9]
    cdef double Xi[9]
    cdef double prev[9]
    cdef int i, it
    cdef double diff, d
    for i in range(9):
        X[i] = R[i]
    for it in range(20):
        for i in range(9):
            prev[i] = X[i]
        if inv3(X, Xi) != 0:
            return 1
        # X = (X + Xi^T)/2
        X[0] = 0.5 * (X[0] + Xi[0]); X[1] = 0.5 * (X[1] + Xi[3]); X[2] = 0.5 * (X[2] + Xi[6])
        X[3] = 0.5 * (X[3] + Xi[1]); X[4] = 0.5 * (X[4] + Xi[4]); X[5] = 0.5 * (X[5] + Xi[7])
        X[6] = 0.5 * (X[6] + Xi[2]); X[7] = 0.5 * (X[7] + Xi[5]); X[8] = 0.5 * (X[8] + Xi[8])
        diff = 0.0
        for i in range(9):
            d = X[i] - prev[i]
            if d < 0.0:
                d = -d
            if d > diff:
                diff = d
        if diff < 1e-15:
            break
    for i in range(9):
        R[i] = X[i]
    return 0


cdef void ref_kin(double t, int family, const double* r, double* p_d,
                  double* v_d, double* a_d) noexcept nogil:
    cdef double w, c, s, aa, bb
    if family == REF_HOVER:
        p_d[0] = r[0]; p_d[1] = r[1]; p_d[2] = r[2]
        v_d[0] = v_d[1] = v_d[2] = 0.0
        a_d[0] = a_d[1] = a_d[2] = 0.0
    elif family == REF_CIRCLE:
        w = TWO_PI / r[1]
        c = cos(w * t); s = sin(w * t)
        p_d[0] = r[0] * c; p_d[1] = r[0] * s; p_d[2] = r[2]
        v_d[0] = -r[0] * w * s; v_d[1] = r[0] * w * c; v_d[2] = 0.0
        a_d[0] = -r[0] * w * w * c; a_d[1] = -r[0] * w * w * s; a_d[2] = 0.0
    else:
        aa = r[0]; bb = r[1]
        w = TWO_PI / r[2]
        p_d[0] = aa * sin(w * t); p_d[1] = bb * sin(2.0 * w * t); p_d[2] = r[3]
        v_d[0] = aa * w * cos(w * t)
        v_d[1] = 2.0 * bb * w * cos(2.0 * w * t)
        v_d[2] = 0.0
        a_d[0] = -aa * w * w * sin(w * t)
        a_d[1] = -4.0 * bb * w * w * sin(2.0 * w * t)
        a_d[2] = 0.0


cdef int att_from_force(const double* F, double* R) noexcept nogil:
    # columns [b1 b2 b3], b3 = -F/|F|, yaw fixed at zero (b1c = e1)
    cdef double n = sqrt(F[0] * F[0] + F[1] * F[1] + F[2] * F[2])
    cdef double b3[3]
    cdef double b2[3]
    cdef double b1[3]
    cdef double b1c[3]
    cdef double n2
    if n < FORCE_EPS:
        return 1
    b3[0] = -F[0] / n; b3[1] = -F[1] / n; b3[2] = -F[2] / n
    b1c[0] = 1.0; b1c[1] = 0.0; b1c[2] = 0.0
    cross(b3, b1c, b2)
    n2 = sqrt(b2[0] * b2[0] + b2[1] * b2[1] + b2[2] * b2[2])
    if n2 < FORCE_EPS:
        return 1
    b2[0] /= n2; b2[1] /= n2; b2[2] /= n2
    cross(b2, b3, b1)
    R[0] = b1[0]; R[1] = b2[0]; R[2] = b3[0]
    R[3] = b1[1]; R[4] = b2[1]; R[5] = b3[1]
    R[6] = b1[2]; R[7] = b2[2]; R[8] = b3[2]
    return 0


cdef int ref_attitude(double t, int family, const double* r, double g,
                      double* R_d, double* Om_d, double* Omd_d) noexcept nogil:
    # zero-error desired force a_d - g e3 differentiated at five stencil points
    cdef double Rs[5][9]
    cdef double p[3]
    cdef double v[3]
    cdef double a[3]
    cdef double F[3]
    cdef double Rdot[9]
    cdef double W[9]
    cdef double om[3][3]
    cdef int j, i
    for j in range(5):
        ref_kin(t + (j - 2) * FD_H, family, r, p, v, a)
        F[0] = a[0]; F[1] = a[1]; F[2] = a[2] - g
        if att_from_force(F, Rs[j]) != 0:
            return 1
    for j in range(3):
        # omega at stencil index j+1
        for i in range(9):
            Rdot[i] = (Rs[j + 2][i] - Rs[j][i]) / (2.0 * FD_H)
        mat_tmul(Rs[j + 1], Rdot, W)
        om[j][0] = W[7]; om[j][1] = W[2]; om[j][2] = W[3]
    for i in range(9):
        R_d[i] = Rs[2][i]
    for i in range(3):
        Om_d[i] = om[1][i]
        Omd_d[i] = (om[2][i] - om[0][i]) / (2.0 * FD_H)
    return 0


cdef int geom_ctrl(const double* x, const double* p_d, const double* v_d,
                   const double* a_d, const double* Om_d, const double* Omd_d,
                   const double* par, double* f_out, double* M_out) noexcept nogil:
    cdef double F_d[3]
    cdef double Re3[3]
    cdef double R_d[9]
    cdef double E[9]
    cdef double RtRd[9]
    cdef double e_R[3]
    cdef double e_Om[3]
    cdef double tmp[3]
    cdef double gyro[3]
    cdef double JOm[3]
    cdef double RdtR[9]
    cdef double ff[3]
    cdef double cr[3]
    cdef int i
    cdef double m0 = par[P_M0]
    cdef double g = par[P_G]
    cdef const double* R = x + 6
    cdef const double* Om = x + 15

    for i in range(3):
        F_d[i] = (-par[P_KP + i] * (x[i] - p_d[i])
                  - par[P_KV + i] * (x[3 + i] - v_d[i])
                  + m0 * a_d[i])
    F_d[2] -= m0 * g
    Re3[0] = R[2]; Re3[1] = R[5]; Re3[2] = R[8]
    f_out[0] = -(F_d[0] * Re3[0] + F_d[1] * Re3[1] + F_d[2] * Re3[2])
    if att_from_force(F_d, R_d) != 0:
        return 1
    # e_R = 0.5 vee(R_d^T R - R^T R_d); R^T R_d = (R_d^T R)^T
    mat_tmul(R_d, R, RdtR)
    E[1] = RdtR[1] - RdtR[3]
    E[2] = RdtR[2] - RdtR[6]
    E[5] = RdtR[5] - RdtR[7]
    e_R[0] = 0.5 * (-E[5])
    e_R[1] = 0.5 * E[2]
    e_R[2] = 0.5 * (-E[1])
    mat_tmul(R, R_d, RtRd)
    mat_vec(RtRd, Om_d, tmp)           # R^T R_d Omega_d
    for i in range(3):
        e_Om[i] = Om[i] - tmp[i]
        JOm[i] = par[P_JX + i] * Om[i]
    cross(Om, JOm, gyro)
    cross(Om, tmp, cr)                  # Omega x (R^T R_d Omega_d)
    mat_vec(RtRd, Omd_d, ff)            # R^T R_d Omega_d_dot
    for i in range(3):
        M_out[i] = (-par[P_KR + i] * e_R[i] - par[P_KOM + i] * e_Om[i]
                    + gyro[i] - par[P_JX + i] * (cr[i] - ff[i]))
    return 0


cdef void deriv(const double* s, double f, const double* M, double m_dot,
                double g, const double* Jd, double* ds) noexcept nogil:
    cdef const double* R = s + 6
    cdef const double* Om = s + 15
    cdef double m = s[18]
    cdef double JOm[3]
    cdef double cr[3]
    cdef int i
    ds[0] = s[3]; ds[1] = s[4]; ds[2] = s[5]
    ds[3] = -f * R[2] / m
    ds[4] = -f * R[5] / m
    ds[5] = g - f * R[8] / m
    # Rdot = R @ wedge(Omega)
    ds[6] = R[1] * Om[2] - R[2] * Om[1]
    ds[7] = R[2] * Om[0] - R[0] * Om[2]
    ds[8] = R[0] * Om[1] - R[1] * Om[0]
    ds[9] = R[4] * Om[2] - R[5] * Om[1]
    ds[10] = R[5] * Om[0] - R[3] * Om[2]
    ds[11] = R[3] * Om[1] - R[4] * Om[0]
    ds[12] = R[7] * Om[2] - R[8] * Om[1]
    ds[13] = R[8] * Om[0] - R[6] * Om[2]
    ds[14] = R[6] * Om[1] - R[7] * Om[0]
    for i in range(3):
        JOm[i] = Jd[i] * Om[i]
    cross(Om, JOm, cr)
    for i in range(3):
        ds[15 + i] = (M[i] - cr[i]) / Jd[i]
    ds[18] = m_dot


cdef int rk4_step(double* s, double f, const double* M, double m_dot,
                  double g, const double* Jd, double dt) noexcept nogil:
    cdef double k1[19]
    cdef double k2[19]
    cdef double k3[19]
    cdef double k4[19]
    cdef double y[19]
    cdef int i
    deriv(s, f, M, m_dot, g, Jd, k1)
    for i in range(19):
        y[i] = s[i] + 0.5 * dt * k1[i]
    deriv(y, f, M, m_dot, g, Jd, k2)
    for i in range(19):
        y[i] = s[i] + 0.5 * dt * k2[i]
    deriv(y, f, M, m_dot, g, Jd, k3)
    for i in range(19):
        y[i] = s[i] + dt * k3[i]
    deriv(y, f, M, m_dot, g, Jd, k4)
    for i in range(19):
        s[i] = s[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    if polar_project(s + 6) != 0:
        return 1
    for i in range(19):
        if not isfinite(s[i]):
            return 1
    return 0


cdef inline double pc_gain(double x_tilde, double a_s, double Ts) noexcept nogil:
    cdef double e = exp(a_s * Ts)
    cdef double phi = (e - 1.0) / a_s
    return -(1.0 / phi) * e * x_tilde


cdef int c_run(double* x, int n_steps, const double* par, int family,
               int l1_on, int n_adapt, int d_steps, double* out,
               double* cmd) noexcept nogil:
    cdef double dt = par[P_DT]
    cdef double m0 = par[P_M0]
    cdef double g = par[P_G]
    cdef double fmax = par[P_FMAX]
    cdef double a_m = par[P_MASS_A]
    cdef double om_m = par[P_MASS_OM]
    cdef double ph_m = par[P_MASS_PH]
    cdef double Ts_eff = n_adapt * dt
    cdef double alpha_f = exp(-par[P_WCF] * dt)
    cdef double alpha_M = exp(-par[P_WCM] * dt)

    cdef double v_hat[3]
    cdef double om_hat[3]
    cdef double sigma[4]
    cdef double u_l1[4]
    cdef double p_d[3]
    cdef double v_d[3]
    cdef double a_d[3]
    cdef double R_dref[9]
    cdef double Om_d[3]
    cdef double Omd_d[3]
    cdef double f_geo, f_total, f_pred, f_app, m_dot, sphase, vtz
    cdef double M_geo[3]
    cdef double M_total[3]
    cdef double v_tilde[3]
    cdef double om_tilde[3]
    cdef double vt_body[3]
    cdef double Re3[3]
    cdef double JOm[3]
    cdef double cr[3]
    cdef double M_app[3]
    cdef double pn, t
    cdef double* row
    cdef const double* src
    cdef int k, i

    for i in range(3):
        v_hat[i] = x[3 + i]
        om_hat[i] = x[15 + i]
    for i in range(4):
        sigma[i] = 0.0
        u_l1[i] = 0.0

    for k in range(n_steps + 1):
        t = k * dt
        ref_kin(t, family, par + P_REF, p_d, v_d, a_d)
        if ref_attitude(t, family, par + P_REF, g, R_dref, Om_d, Omd_d) != 0:
            return -(k + 1)
        if geom_ctrl(x, p_d, v_d, a_d, Om_d, Omd_d, par, &f_geo, M_geo) != 0:
            return -(k + 1)
        if l1_on:
            f_total = f_geo + u_l1[0]
            for i in range(3):
                M_total[i] = M_geo[i] + u_l1[1 + i]
        else:
            f_total = f_geo
            for i in range(3):
                M_total[i] = M_geo[i]
        cmd[4 * k] = f_total
        cmd[4 * k + 1] = M_total[0]
        cmd[4 * k + 2] = M_total[1]
        cmd[4 * k + 3] = M_total[2]

        if k >= d_steps:
            src = cmd + 4 * (k - d_steps)
            f_app = src[0]
            M_app[0] = src[1]; M_app[1] = src[2]; M_app[2] = src[3]
        else:
            f_app = m0 * g
            M_app[0] = M_app[1] = M_app[2] = 0.0
        if f_app < 0.0:
            f_app = 0.0
        elif f_app > fmax:
            f_app = fmax

        row = out + NCOL * k
        row[C_T] = t
        for i in range(19):
            row[C_P + i] = x[i]
        row[C_FCMD] = f_total
        for i in range(3):
            row[C_MCMD + i] = M_total[i]
        row[C_FAPP] = f_app
        for i in range(3):
            row[C_MAPP + i] = M_app[i]
        for i in range(4):
            row[C_UL1 + i] = u_l1[i]

        if k == n_steps:
            break

        if l1_on:
            for i in range(3):
                v_tilde[i] = v_hat[i] - x[3 + i]
                om_tilde[i] = om_hat[i] - x[15 + i]
            if k % n_adapt == 0:
                mat_tvec(x + 6, v_tilde, vt_body)
                vtz = vt_body[2]
                sigma[0] = -m0 * pc_gain(vtz, par[P_ASV + 2], Ts_eff)
                for i in range(3):
                    sigma[1 + i] = par[P_JX + i] * pc_gain(
                        om_tilde[i], par[P_ASOM + i], Ts_eff)
            f_pred = f_total
            if f_pred < 0.0:
                f_pred = 0.0
            elif f_pred > fmax:
                f_pred = fmax
            Re3[0] = x[6 + 2]; Re3[1] = x[6 + 5]; Re3[2] = x[6 + 8]
            for i in range(3):
                JOm[i] = par[P_JX + i] * x[15 + i]
            cross(x + 15, JOm, cr)
            v_hat[0] += dt * (-(f_pred + sigma[0]) * Re3[0] / m0
                              + par[P_ASV] * v_tilde[0])
            v_hat[1] += dt * (-(f_pred + sigma[0]) * Re3[1] / m0
                              + par[P_ASV + 1] * v_tilde[1])
            v_hat[2] += dt * (g - (f_pred + sigma[0]) * Re3[2] / m0
                              + par[P_ASV + 2] * v_tilde[2])
            for i in range(3):
                om_hat[i] += dt * ((M_total[i] + sigma[1 + i] - cr[i]) / par[P_JX + i]
                                   + par[P_ASOM + i] * om_tilde[i])
            for i in range(3):
                if not (isfinite(v_hat[i]) and isfinite(om_hat[i])):
                    return -(k + 1)
            u_l1[0] = alpha_f * u_l1[0] + (1.0 - alpha_f) * (-sigma[0])
            for i in range(1, 4):
                u_l1[i] = alpha_M * u_l1[i] + (1.0 - alpha_M) * (-sigma[i])
            if u_l1[0] > par[P_SATF]:
                u_l1[0] = par[P_SATF]
            elif u_l1[0] < -par[P_SATF]:
                u_l1[0] = -par[P_SATF]
            for i in range(1, 4):
                if u_l1[i] > par[P_SATM]:
                    u_l1[i] = par[P_SATM]
                elif u_l1[i] < -par[P_SATM]:
                    u_l1[i] = -par[P_SATM]

        if a_m != 0.0:
            sphase = sin(om_m * t + ph_m)
            m_dot = x[18] * a_m * om_m * cos(om_m * t + ph_m) / (1.0 + a_m * sphase)
        else:
            m_dot = 0.0
        if rk4_step(x, f_app, M_app, m_dot, g, par + P_JX, dt) != 0:
            return -(k + 1)
        pn = sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])
        if pn > DIVERGENCE_RADIUS:
            return k + 1
    return 0


def run_closed_loop(double[::1] x0, int n_steps, double[::1] par, int family,
                    int l1_enabled, int n_adapt, int d_steps,
                    double[:, ::1] out):
    """Same contract as _kernel_py.run_closed_loop."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xbuf = np.array(x0, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cmd = np.zeros(4 * (n_steps + 1))
    cdef double* xp = <double*> cnp.PyArray_DATA(xbuf)
    cdef double* cp = <double*> cnp.PyArray_DATA(cmd)
    cdef int rc
    with nogil:
        rc = c_run(xp, n_steps, &par[0], family, l1_enabled, n_adapt,
                   d_steps, &out[0, 0], cp)
    return rc
