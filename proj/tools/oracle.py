#!/usr/bin/env python3
"""Regenerates the frozen reference values embedded in tests/.

Every quantity is computed with mpmath at 40 digits, via routes independent
of the C++ implementation: Bessel terms use mpmath.besseli, theta averages
use adaptive Gauss quadrature instead of trapezoid sums, and the estimator
formulas are evaluated as straight-line expressions.

Run from the repo root:  python3 tools/oracle.py
"""

import mpmath as mp

mp.mp.dps = 40

# default source / channel / protocol parameters
MU1, MU2, T = mp.mpf("0.5"), mp.mpf("1e-4"), mp.mpf("0.5")
ETA_D, EPS = mp.mpf("0.12"), mp.mpf("3.2e-7")
ALPHA, ETA_BOB = mp.mpf("0.21"), mp.mpf("0.045")
Y0, E_D, E0 = mp.mpf("1.7e-6"), mp.mpf("0.033"), mp.mpf("0.5")
Q_SIFT, F_EC = mp.mpf("0.5"), mp.mpf("1.22")


def emit(name, value):
    print(f"{name} = {mp.nstr(value, 17, strip_zeros=False)}")


def derived(mu1=MU1, mu2=MU2, t=T):
    nu = mu1 + mu2
    xi = 2 * mp.sqrt(mu1 * mu2 * (1 - t) * t)
    wa = mu1 * t + mu2 * (1 - t)
    wb = mu1 * (1 - t) + mu2 * t
    return nu, xi, wa, wb


def theta_mean(f):
    return mp.quad(f, [0, mp.pi]) / mp.pi  # integrands here are even in theta


def p_total(n, mu1=MU1, mu2=MU2, t=T):
    nu, xi, wa, _ = derived(mu1, mu2, t)
    pref = nu ** n / mp.factorial(n)
    return pref * theta_mean(lambda th: ((wa + xi * mp.cos(th)) / nu) ** n
                             * mp.e ** (-(wa + xi * mp.cos(th))))


def p_noclick(n, mu1=MU1, mu2=MU2, t=T, eta_d=ETA_D, eps=EPS):
    nu, xi, wa, _ = derived(mu1, mu2, t)
    pref = (1 - eps) * nu ** n / mp.factorial(n) * mp.e ** (-eta_d * nu)
    return pref * theta_mean(lambda th: ((wa + xi * mp.cos(th)) / nu) ** n
                             * mp.e ** (-(1 - eta_d) * (wa + xi * mp.cos(th))))


def joint_prob(n, m, mu1=MU1, mu2=MU2, t=T):
    nu, xi, wa, _ = derived(mu1, mu2, t)
    pref = mp.e ** (-nu) * nu ** (n + m) / (mp.factorial(n) * mp.factorial(m))
    return pref * theta_mean(lambda th: ((wa + xi * mp.cos(th)) / nu) ** n
                             * (1 - (wa + xi * mp.cos(th)) / nu) ** m)


def noclick_aggregate(mu1=MU1, mu2=MU2, t=T, eta_d=ETA_D, eps=EPS):
    _, xi, _, wb = derived(mu1, mu2, t)
    return (1 - eps) * mp.e ** (-eta_d * wb) * mp.besseli(0, eta_d * xi)


def eta_sys(d):
    return ETA_BOB * mp.mpf(10) ** (-ALPHA * d / 10)


def observables(d):
    nu, xi, wa, wb = derived()
    es = eta_sys(d)
    pnc_agg = noclick_aggregate()
    qt = 1 - (1 - Y0) * mp.e ** (-es * wa) * mp.besseli(0, es * xi)
    qnc = pnc_agg - (1 - EPS) * (1 - Y0) * mp.e ** (-ETA_D * wb - es * wa) \
        * mp.besseli(0, (ETA_D - es) * xi)
    qc = qt - qnc
    et = ((E0 - E_D) * Y0 + E_D * qt) / qt
    enc = ((E0 - E_D) * Y0 * pnc_agg + E_D * qnc) / qnc
    ec = (et * qt - enc * qnc) / qc
    return qt, qc, qnc, et, ec, enc


def h2(x):
    if x <= 0 or x >= 1:
        return mp.mpf(0)
    return -x * mp.log(x, 2) - (1 - x) * mp.log(1 - x, 2)


def passive(d):
    qt, qc, qnc, et, ec, enc = observables(d)
    pt = [p_total(n) for n in range(3)]
    pnc = [p_noclick(n) for n in range(3)]
    pc = [a - b for a, b in zip(pt, pnc)]
    den = pt[2] * pnc[1] - pnc[2] * pt[1]
    num = pt[2] * qnc - pnc[2] * qt - (pt[2] * pnc[0] - pnc[2] * pt[0]) * Y0
    y1 = max(num / den, 0)
    c1 = (ec * qc - pc[0] * Y0 * E0) / (pc[1] * y1)
    c2 = (enc * qnc - pnc[0] * Y0 * E0) / (pnc[1] * y1)
    c3 = (pnc[0] * et * qt - pt[0] * enc * qnc) / ((pt[1] * pnc[0] - pnc[1] * pt[0]) * y1)
    e1 = min(c1, c2, c3)
    rc = Q_SIFT * (pc[0] * Y0 + pc[1] * y1 * (1 - h2(e1)) - qc * F_EC * h2(ec))
    rnc = Q_SIFT * (pnc[0] * Y0 + pnc[1] * y1 * (1 - h2(e1)) - qnc * F_EC * h2(enc))
    return y1, (c1, c2, c3), e1, rc, rnc, max(rc, 0) + max(rnc, 0)


def active_qe(mu, d):
    es = eta_sys(d)
    q = 1 - (1 - Y0) * mp.e ** (-es * mu)
    e = (E_D * q + (E0 - E_D) * Y0) / q
    return q, e


def active_rate(mu, nu, d, delta, vacuum):
    qm, em = active_qe(mu, d)
    qn, en = active_qe(nu, d)
    mus = [mu] if delta == 0 else [mu * (1 - delta), mu * (1 + delta)]
    nus = [nu] if delta == 0 else [nu * (1 - delta), nu * (1 + delta)]

    def bounds(m, n):
        y0u = Y0 if vacuum else en * qn * mp.e ** n / E0
        y0l = Y0 if vacuum else mp.mpf(0)
        y1 = (m / (m * n - n * n)) * (qn * mp.e ** n - qm * mp.e ** m * n * n / (m * m)
                                      - ((m * m - n * n) / (m * m)) * y0u)
        if y1 <= 0:
            return mp.mpf(0), mp.mpf(1)
        e1 = (en * qn * mp.e ** n - E0 * y0l) / (y1 * n)
        return y1, min(max(e1, 0), 1)

    y1 = min(bounds(m, n)[0] for m in mus for n in nus)
    if y1 <= 0:
        return mp.mpf(0)
    e1 = max(bounds(m, n)[1] for m in mus for n in nus)
    y0l = Y0 if vacuum else mp.mpf(0)
    p0 = min(mp.e ** (-m) for m in mus)
    p1 = min(m * mp.e ** (-m) for m in mus)
    r = Q_SIFT * (p0 * y0l + p1 * y1 * (1 - h2(e1)) - qm * F_EC * h2(em))
    return max(r, 0)


def axis_nodes_double(center, delta, count):
    """The estimator marches a double-precision lattice; reproduce it bitwise
    with Python floats (IEEE doubles) before lifting to mpf."""
    c, d = float(center), float(delta)
    lo, hi = c * (1.0 - d), c * (1.0 + d)
    return lo, hi, [hi if j == count - 1 else lo + (hi - lo) * j / (count - 1)
                    for j in range(count)]


def nominal_ncut(tail_mass=mp.mpf("1e-9")):
    cum = mp.mpf(0)
    for n in range(65):
        cum += p_total(n)
        if 1 - cum <= tail_mass:
            return n
    raise RuntimeError("tail mass not reached")


def clamp01(x):
    return min(max(x, mp.mpf(0)), mp.mpf(1))


def chain_bound(qc, qnc, ec, pc_L, pnc_U, Pnc_L, Pnc_U, tail_up, e0=E0):
    Pc_L, Pc_U = 1 - Pnc_U, 1 - Pnc_L
    q_all = [a / b for a, b in zip(pc_L, pnc_U)]
    rescale = Pnc_L / Pc_U
    qh1 = q_all[1] * rescale
    if qh1 <= 0 or qh1 >= 1:
        return mp.mpf(0)
    gap = qnc / Pnc_U - qc / Pc_L
    qh0 = q_all[0] * rescale
    if qh0 <= 0:
        return mp.mpf(0)
    vac = (ec * qc / (e0 * Pc_L)) * (1 / qh0 - 1) if qh0 < 1 else mp.mpf(0)
    qhs = min(q_all[2:]) * rescale
    if qhs <= 0:
        return mp.mpf(0)
    multi = (1 / qhs - 1) * qc / Pc_L if qhs < 1 else mp.mpf(0)
    num = gap - vac - multi - tail_up / Pnc_L
    if num <= 0:
        return mp.mpf(0)
    return clamp01(num / (1 / qh1 - 1) * Pc_L / qc)


def fluct_slice_pipeline(d, delta, slice_grid=41):
    """Observation-consistent worst-case pipeline: sample the contour
    { N_w(mu') = N_w(nominal) } over slice_grid mu2 columns, envelope the
    per-n statistics, and push the click-side bounds through to a rate."""
    pnc_obs = noclick_aggregate()
    ncut = nominal_ncut()
    lo1, hi1, _ = axis_nodes_double(MU1, delta, 2)
    _, _, m2cols = axis_nodes_double(MU2, delta, slice_grid)

    nodes = []
    for m2f in m2cols:
        m2 = mp.mpf(m2f)
        f = lambda x: noclick_aggregate(x, m2) - pnc_obs
        flo, fhi = f(mp.mpf(lo1)), f(mp.mpf(hi1))
        if flo == 0:
            m1 = mp.mpf(lo1)
        elif fhi == 0:
            m1 = mp.mpf(hi1)
        elif (flo > 0) == (fhi > 0):
            continue
        else:
            m1 = mp.findroot(f, (mp.mpf(lo1), mp.mpf(hi1)), solver="anderson")
        nodes.append((m1, m2))
    nodes.append((MU1, MU2))  # nominal sits on the contour exactly

    arrays = []
    for m1, m2 in nodes:
        pt = [p_total(n, m1, m2) for n in range(ncut + 1)]
        pnc = [p_noclick(n, m1, m2) for n in range(ncut + 1)]
        pc = [a - b for a, b in zip(pt, pnc)]
        tail = max(1 - sum(pt), mp.mpf(0))
        arrays.append((pt, pnc, pc, tail, noclick_aggregate(m1, m2)))

    pc_L = [min(a[2][n] for a in arrays) for n in range(ncut + 1)]
    pc_U = [max(a[2][n] for a in arrays) for n in range(ncut + 1)]
    pnc_L = [min(a[1][n] for a in arrays) for n in range(ncut + 1)]
    pnc_U = [max(a[1][n] for a in arrays) for n in range(ncut + 1)]
    Pnc_L = min(a[4] for a in arrays)
    Pnc_U = max(a[4] for a in arrays)
    tail_up = max(a[3] for a in arrays)
    q_all = [a / b for a, b in zip(pc_L, pnc_U)]

    qt, qc, qnc, et, ec, enc = observables(d)

    def y1_node(pt, pnc):
        den = pt[2] * pnc[1] - pnc[2] * pt[1]
        num = pt[2] * qnc - pnc[2] * qt - (pt[2] * pnc[0] - pnc[2] * pt[0]) * Y0
        return max(num / den, mp.mpf(0))

    y1w = min(y1_node(a[0], a[1]) for a in arrays)
    floor = y1w * pc_L[1] / qc if y1w > 0 else mp.mpf(0)
    chain = chain_bound(qc, qnc, ec, pc_L, pnc_U, Pnc_L, Pnc_U, tail_up)
    d1c = clamp01(max(floor, chain))
    d0c = clamp01(Y0 * pc_L[0] / qc)
    c1 = clamp01((ec - E0 * d0c) / d1c)
    c2w = max((enc * qnc - a[1][0] * Y0 * E0) / (a[1][1] * y1w) for a in arrays)
    c3w = max((a[1][0] * et * qt - a[0][0] * enc * qnc)
              / ((a[0][1] * a[1][0] - a[1][1] * a[0][0]) * y1w) for a in arrays)
    e1 = clamp01(min(c1, c2w, c3w))
    y1c = clamp01(d1c * qc / pc_U[1])
    d1nc = clamp01(y1c * pnc_L[1] / qnc)
    d0nc = clamp01(Y0 * pnc_L[0] / qnc)
    credit = 1 - h2(e1)
    rc = Q_SIFT * qc * (d0c + d1c * credit - F_EC * h2(ec))
    rnc = Q_SIFT * qnc * (d0nc + d1nc * credit - F_EC * h2(enc))
    r = max(rc, mp.mpf(0)) + max(rnc, mp.mpf(0))
    return {
        "nodes": len(nodes), "ncut": ncut,
        "pc_L0": pc_L[0], "pc_L1": pc_L[1], "pc_U1": pc_U[1],
        "pnc_L0": pnc_L[0], "pnc_L1": pnc_L[1], "pnc_U1": pnc_U[1],
        "Pnc_L": Pnc_L, "Pnc_U": Pnc_U, "tail_upper": tail_up,
        "q0": q_all[0], "q1": q_all[1], "q2": q_all[2],
        "q_star": min(q_all[2:]),
        "Y1_worst": y1w, "chain": chain, "Delta1c_L": d1c, "Delta0c_L": d0c,
        "c1": c1, "c2w": c2w, "c3w": c3w, "e1c_U": e1,
        "Y1c_L": y1c, "Delta1nc_L": d1nc, "Delta0nc_L": d0nc,
        "R_c": rc, "R_nc": rnc, "R": r,
    }


def main():
    print("# numerics")
    for z in ("1.0", "0.70711", "7.0711e-3", "5.0", "12.0", "15.5", "20.0", "35.0", "50.0"):
        emit(f"bessel_i0({z})", mp.besseli(0, mp.mpf(z)))
    emit("binary_entropy(0.11)", h2(mp.mpf("0.11")))
    emit("binary_entropy(0.033)", h2(mp.mpf("0.033")))
    emit("poisson_pmf(150, 0.5)", mp.e ** (-mp.mpf("0.5")) * mp.mpf("0.5") ** 150 / mp.factorial(150))
    emit("poisson_pmf(3, 0.5)", mp.e ** (-mp.mpf("0.5")) * mp.mpf("0.5") ** 3 / mp.factorial(3))

    print("# source-stats, default parameters")
    nu, xi, wa, wb = derived()
    emit("nu", nu)
    emit("xi", xi)
    emit("w_a", wa)
    emit("w_b", wb)
    for n in range(6):
        emit(f"p_total({n})", p_total(n))
    for n in range(6):
        emit(f"p_noclick({n})", p_noclick(n))
    emit("joint_prob(0,0)", joint_prob(0, 0))
    emit("joint_prob(1,1)", joint_prob(1, 1))
    emit("joint_prob(2,1)", joint_prob(2, 1))
    emit("P_noclick", noclick_aggregate())

    print("# channel, d=30 and d=50")
    for d in (30, 50):
        qt, qc, qnc, et, ec, enc = observables(d)
        emit(f"eta_sys({d})", eta_sys(d))
        emit(f"Q_t({d})", qt)
        emit(f"Q_c({d})", qc)
        emit(f"Q_nc({d})", qnc)
        emit(f"E_t({d})", et)
        emit(f"E_c({d})", ec)
        emit(f"E_nc({d})", enc)

    print("# passive estimator, d=30 and d=50")
    for d in (30, 50):
        y1, cands, e1, rc, rnc, r = passive(d)
        emit(f"Y1_L({d})", y1)
        emit(f"e1_c1({d})", cands[0])
        emit(f"e1_c2({d})", cands[1])
        emit(f"e1_c3({d})", cands[2])
        emit(f"e1_U({d})", e1)
        emit(f"R_c({d})", rc)
        emit(f"R_nc({d})", rnc)
        emit(f"R({d})", r)

    print("# true single-photon quantities, d=30")
    es = eta_sys(30)
    y1t = 1 - (1 - Y0) * (1 - es)
    emit("Y1_true(30)", y1t)
    emit("e1_true(30)", (E0 * Y0 + E_D * (y1t - Y0)) / y1t)

    print("# active baselines, d=30")
    for mu in ("0.5", "0.05"):
        q, e = active_qe(mp.mpf(mu), 30)
        emit(f"active_Q({mu})", q)
        emit(f"active_E({mu})", e)
    emit("active3_R(30, 0)", active_rate(mp.mpf("0.5"), mp.mpf("0.05"), 30, mp.mpf(0), True))
    emit("active3_R(30, 0.02)", active_rate(mp.mpf("0.5"), mp.mpf("0.05"), 30, mp.mpf("0.02"), True))
    emit("active2_R(30, 0)", active_rate(mp.mpf("0.5"), mp.mpf("0.05"), 30, mp.mpf(0), False))
    emit("active2_R(30, 0.02)", active_rate(mp.mpf("0.5"), mp.mpf("0.05"), 30, mp.mpf("0.02"), False))

    for d, delta in ((30, "0.02"), (50, "0.10")):
        print(f"# fluctuation slice pipeline, d={d}, delta={delta}")
        out = fluct_slice_pipeline(d, mp.mpf(delta))
        print(f"fluct_nodes({d},{delta}) = {out.pop('nodes')}")
        print(f"fluct_ncut({d},{delta}) = {out.pop('ncut')}")
        for key, val in out.items():
            emit(f"fluct_{key}({d},{delta})", val)


if __name__ == "__main__":
    main()
