#include "pdqkd/fluctuation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <utility>

namespace pdqkd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

struct AxisGrid {
    double lo, hi;
    int count;  // 1 when the axis does not fluctuate
    double at(int i) const {
        if (count == 1) return lo;
        if (i == count - 1) return hi;
        return lo + (hi - lo) * i / (count - 1);
    }
    double step() const { return count == 1 ? 0.0 : (hi - lo) / (count - 1); }
    double clamped(double v) const { return std::clamp(v, lo, hi); }
};

AxisGrid make_axis(double center, double delta, int count) {
    if (delta == 0.0) return {center, center, 1};
    return {center * (1.0 - delta), center * (1.0 + delta), count};
}

// Running envelopes with the location of each incumbent extremum, so the
// refinement pass knows where to look closer.
struct Envelope {
    std::vector<double> pc_L, pc_U, pnc_L, pnc_U;
    double Pnc_L = kInf, Pnc_U = -kInf;
    double tail_upper = 0.0;
    std::vector<std::pair<double, double>> arg_pc_L, arg_pc_U, arg_pnc_L,
        arg_pnc_U;
    std::pair<double, double> arg_Pnc_L{}, arg_Pnc_U{};

    explicit Envelope(int n_cut)
        : pc_L(n_cut + 1, kInf),
          pc_U(n_cut + 1, -kInf),
          pnc_L(n_cut + 1, kInf),
          pnc_U(n_cut + 1, -kInf),
          arg_pc_L(n_cut + 1),
          arg_pc_U(n_cut + 1),
          arg_pnc_L(n_cut + 1),
          arg_pnc_U(n_cut + 1) {}

    void merge(const PhotonNumberStats& st) {
        const std::pair<double, double> at{st.params.mu1, st.params.mu2};
        for (std::size_t n = 0; n < pc_L.size(); ++n) {
            if (st.p_click[n] < pc_L[n]) pc_L[n] = st.p_click[n], arg_pc_L[n] = at;
            if (st.p_click[n] > pc_U[n]) pc_U[n] = st.p_click[n], arg_pc_U[n] = at;
            if (st.p_noclick[n] < pnc_L[n])
                pnc_L[n] = st.p_noclick[n], arg_pnc_L[n] = at;
            if (st.p_noclick[n] > pnc_U[n])
                pnc_U[n] = st.p_noclick[n], arg_pnc_U[n] = at;
        }
        if (st.P_noclick < Pnc_L) Pnc_L = st.P_noclick, arg_Pnc_L = at;
        if (st.P_noclick > Pnc_U) Pnc_U = st.P_noclick, arg_Pnc_U = at;
        tail_upper = std::max(tail_upper, st.tail_total);
    }

    std::set<std::pair<double, double>> incumbents() const {
        std::set<std::pair<double, double>> out;
        for (std::size_t n = 0; n < pc_L.size(); ++n) {
            out.insert(arg_pc_L[n]);
            out.insert(arg_pc_U[n]);
            out.insert(arg_pnc_L[n]);
            out.insert(arg_pnc_U[n]);
        }
        out.insert(arg_Pnc_L);
        out.insert(arg_Pnc_U);
        return out;
    }
};

ProbabilityIntervals seal(Envelope&& env, int n_cut) {
    ProbabilityIntervals iv;
    iv.n_cut = n_cut;
    iv.pc_L = std::move(env.pc_L);
    iv.pc_U = std::move(env.pc_U);
    iv.pnc_L = std::move(env.pnc_L);
    iv.pnc_U = std::move(env.pnc_U);
    iv.Pnc_L = env.Pnc_L;
    iv.Pnc_U = env.Pnc_U;
    iv.Pc_L = 1.0 - env.Pnc_U;
    iv.Pc_U = 1.0 - env.Pnc_L;
    iv.tail_upper = env.tail_upper;
    return iv;
}

}  // namespace

void FluctuationSpec::validate() const {
    if (!(delta_mu1 >= 0.0 && delta_mu1 < 0.5) ||
        !(delta_mu2 >= 0.0 && delta_mu2 < 0.5))
        throw domain_error("FluctuationSpec: half-widths outside [0, 0.5)");
    if (grid_per_axis < 2) throw domain_error("FluctuationSpec: grid_per_axis < 2");
    if (slice_grid < 3) throw domain_error("FluctuationSpec: slice_grid < 3");
}

bool ProbabilityIntervals::empty() const { return pc_L.empty(); }

ProbabilityIntervals probability_intervals(const SourceParams& p,
                                           const FluctuationSpec& spec,
                                           int n_cut,
                                           const QuadratureSpec& quad) {
    p.validate();
    spec.validate();
    const AxisGrid a1 = make_axis(p.mu1, spec.delta_mu1, spec.grid_per_axis);
    const AxisGrid a2 = make_axis(p.mu2, spec.delta_mu2, spec.grid_per_axis);

    auto eval = [&](double m1, double m2) {
        SourceParams q = p;
        q.mu1 = m1;
        q.mu2 = m2;
        return build_stats_fixed(q, n_cut, quad);
    };

    Envelope env(n_cut);
    for (int i = 0; i < a1.count; ++i)
        for (int j = 0; j < a2.count; ++j)
            env.merge(eval(a1.at(i), a2.at(j)));

    // One half-step look around each incumbent extremum; the lattice plus
    // this pass is what the random-containment test guards.
    const double h1 = 0.5 * a1.step(), h2 = 0.5 * a2.step();
    if (h1 > 0.0 || h2 > 0.0) {
        std::set<std::pair<double, double>> probes;
        for (const auto& [m1, m2] : env.incumbents())
            for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj) {
                    if (di == 0 && dj == 0) continue;
                    probes.insert({a1.clamped(m1 + di * h1),
                                   a2.clamped(m2 + dj * h2)});
                }
        for (const auto& [m1, m2] : probes) env.merge(eval(m1, m2));
    }
    return seal(std::move(env), n_cut);
}

ProbabilityIntervals consistent_intervals(const SourceParams& p,
                                          const FluctuationSpec& spec,
                                          int n_cut, double Pnc_obs,
                                          const QuadratureSpec& quad) {
    p.validate();
    spec.validate();

    std::vector<PhotonNumberStats> nodes;
    auto node_at = [&](double m1, double m2) {
        SourceParams q = p;
        q.mu1 = m1;
        q.mu2 = m2;
        return build_stats_fixed(q, n_cut, quad);
    };
    auto mismatch = [&](double m1, double m2) {
        SourceParams q = p;
        q.mu1 = m1;
        q.mu2 = m2;
        return noclick_aggregate(q) - Pnc_obs;
    };

    if (spec.is_zero()) {
        nodes.push_back(node_at(p.mu1, p.mu2));
    } else if (spec.delta_mu1 > 0.0) {
        // March mu2 across its interval, solving mu1 on the contour.
        const AxisGrid a1 = make_axis(p.mu1, spec.delta_mu1, 2);
        const AxisGrid a2 = make_axis(p.mu2, spec.delta_mu2, spec.slice_grid);
        for (int j = 0; j < a2.count; ++j) {
            const double m2 = a2.at(j);
            const double flo = mismatch(a1.lo, m2), fhi = mismatch(a1.hi, m2);
            double m1;
            if (flo == 0.0)
                m1 = a1.lo;
            else if (fhi == 0.0)
                m1 = a1.hi;
            else if ((flo > 0.0) == (fhi > 0.0))
                continue;  // contour does not cross this mu2 slice
            else
                m1 = find_root([&](double x) { return mismatch(x, m2); },
                               a1.lo, a1.hi);
            nodes.push_back(node_at(m1, m2));
        }
        if (std::fabs(mismatch(p.mu1, p.mu2)) < 1e-18)
            nodes.push_back(node_at(p.mu1, p.mu2));
    } else {
        // Only mu2 fluctuates: the contour pins it directly.
        const AxisGrid a2 = make_axis(p.mu2, spec.delta_mu2, 2);
        const double flo = mismatch(p.mu1, a2.lo), fhi = mismatch(p.mu1, a2.hi);
        if (flo == 0.0)
            nodes.push_back(node_at(p.mu1, a2.lo));
        else if (fhi == 0.0)
            nodes.push_back(node_at(p.mu1, a2.hi));
        else if ((flo > 0.0) != (fhi > 0.0))
            nodes.push_back(node_at(
                p.mu1,
                find_root([&](double x) { return mismatch(p.mu1, x); }, a2.lo,
                          a2.hi)));
    }

    ProbabilityIntervals iv;
    iv.n_cut = n_cut;
    iv.observation_constrained = true;
    if (nodes.empty()) return iv;
    Envelope env(n_cut);
    for (const auto& st : nodes) env.merge(st);
    iv = seal(std::move(env), n_cut);
    iv.observation_constrained = true;
    iv.consistent_nodes = std::move(nodes);
    return iv;
}

QRatios q_ratios(const ProbabilityIntervals& iv) {
    if (iv.empty() || iv.n_cut < 2)
        throw degenerate_error("q_ratios: intervals missing orders up to 2");
    QRatios q;
    q.q_all.resize(iv.n_cut + 1);
    for (int m = 0; m <= iv.n_cut; ++m) {
        if (!(iv.pnc_U[m] > 0.0))
            throw degenerate_error("q_ratios: zero no-click upper bound");
        q.q_all[m] = iv.pc_L[m] / iv.pnc_U[m];
    }
    q.q0 = q.q_all[0];
    q.q1 = q.q_all[1];
    q.q2 = q.q_all[2];
    q.q_star = *std::min_element(q.q_all.begin() + 2, q.q_all.end());
    for (int m = 2; m <= iv.n_cut; ++m)
        if (q.q_all[m] > q.q1 * (1.0 + 1e-12)) q.q1_dominates = false;
    q.q2_below_q0 = q.q2 < q.q0;
    return q;
}

double chain_delta1_click(const Observables& obs,
                          const ProbabilityIntervals& iv, const QRatios& q,
                          bool* applicable, double e0) {
    if (applicable) *applicable = false;
    if (q.q_all.empty()) throw domain_error("chain_delta1_click: no ratios");
    if (q.q_all[0] >= 1.0)
        throw convention_error(
            "chain_delta1_click: q0 >= 1; clicks must be the rare tag");
    if (!(iv.Pc_L > 0.0) || !(iv.Pnc_L > 0.0))
        throw degenerate_error("chain_delta1_click: degenerate tag split");

    // Everything below is per-pulse-in-class (conditional) scale: the gap
    // between the two classes' conditional gains is eaten by vacuum,
    // multiphoton and tail penalties; what remains is single-photon signal.
    const double rescale = iv.Pnc_L / iv.Pc_U;
    const double qh1 = q.q_all[1] * rescale;
    if (!(qh1 > 0.0) || qh1 >= 1.0) return 0.0;
    if (applicable) *applicable = true;

    const double gap = obs.Q_nc / iv.Pnc_U - obs.Q_c / iv.Pc_L;
    const double qh0 = q.q_all[0] * rescale;
    if (!(qh0 > 0.0)) return 0.0;  // vacuum penalty unbounded
    const double vacuum_pen =
        qh0 < 1.0 ? (obs.E_c * obs.Q_c / (e0 * iv.Pc_L)) * (1.0 / qh0 - 1.0)
                  : 0.0;
    const double qhs = q.q_star * rescale;
    if (!(qhs > 0.0)) return 0.0;
    const double multi_pen =
        qhs < 1.0 ? (1.0 / qhs - 1.0) * obs.Q_c / iv.Pc_L : 0.0;
    const double tail_pen = iv.tail_upper / iv.Pnc_L;

    const double num = gap - vacuum_pen - multi_pen - tail_pen;
    if (num <= 0.0) return 0.0;
    return clamp01(num / (1.0 / qh1 - 1.0) * iv.Pc_L / obs.Q_c);
}

DeltaBoundsClick delta_bounds_click(const Observables& obs,
                                    const ProbabilityIntervals& iv,
                                    const QRatios& q, double Y0) {
    if (!(obs.Q_c > 0.0) || !(obs.Q_nc > 0.0))
        throw degenerate_error("delta_bounds_click: zero gain");
    if (iv.empty())
        throw degenerate_error("delta_bounds_click: empty intervals");

    DeltaBoundsClick out;
    out.Y1_worst = kInf;
    for (const auto& node : iv.consistent_nodes) {
        try {
            out.Y1_worst = std::min(out.Y1_worst, y1_lower(node, obs, Y0));
        } catch (const degenerate_error&) {
            // a proportional-statistics node constrains nothing
        }
    }
    if (!std::isfinite(out.Y1_worst)) out.Y1_worst = 0.0;
    out.floor_value =
        out.Y1_worst > 0.0 ? out.Y1_worst * iv.pc_L[1] / obs.Q_c : 0.0;
    out.chain_value = chain_delta1_click(obs, iv, q, &out.chain_applicable);
    out.Delta1c_L = clamp01(std::max(out.floor_value, out.chain_value));
    out.Delta0c_L = clamp01(Y0 * iv.pc_L[0] / obs.Q_c);
    return out;
}

double e1_click_upper(const Observables& obs, double Delta1c_L,
                      double Delta0c_L, bool simplified, bool* clamped,
                      double e0) {
    if (!(Delta1c_L > 0.0))
        throw undefined_bound_error("e1_click_upper: zero single-photon bound");
    const double raw = simplified
                           ? obs.E_c / Delta1c_L
                           : (obs.E_c - e0 * Delta0c_L) / Delta1c_L;
    const double out = clamp01(raw);
    if (clamped) *clamped = out != raw;
    return out;
}

TransferBounds transfer_to_noclick(const Observables& obs,
                                   const ProbabilityIntervals& iv,
                                   double Delta1c_L, double Delta0c_L,
                                   double Y0, bool literal_numerator) {
    (void)Delta0c_L;
    if (iv.empty())
        throw degenerate_error("transfer_to_noclick: empty intervals");
    if (!(obs.Q_nc > 0.0) || !(iv.pc_U[1] > 0.0))
        throw degenerate_error("transfer_to_noclick: zero divisor");
    TransferBounds tb;
    tb.Y1c_L = clamp01(Delta1c_L * obs.Q_c / iv.pc_U[1]);
    const double p1nc = literal_numerator ? iv.pnc_U[1] : iv.pnc_L[1];
    tb.Delta1nc_L = clamp01(tb.Y1c_L * p1nc / obs.Q_nc);
    tb.Delta0nc_L = clamp01(Y0 * iv.pnc_L[0] / obs.Q_nc);
    return tb;
}

FluctRates rates_with_fluctuation(const Observables& obs,
                                  const FluctuationBounds& b,
                                  const ProtocolParams& proto,
                                  bool unclamped_total) {
    proto.validate();
    const double credit = 1.0 - binary_entropy(b.e1c_U);
    FluctRates r;
    r.R_c = proto.q_sifting * obs.Q_c *
            (b.Delta0c_L + b.Delta1c_L * credit -
             proto.f_ec * binary_entropy(obs.E_c));
    r.R_nc = proto.q_sifting * obs.Q_nc *
             (b.Delta0nc_L + b.Delta1nc_L * credit -
              proto.f_ec * binary_entropy(obs.E_nc));
    r.R = unclamped_total ? r.R_c + r.R_nc
                          : std::max(r.R_c, 0.0) + std::max(r.R_nc, 0.0);
    return r;
}

FluctuationContext make_fluctuation_context(const SourceParams& p,
                                            const FluctuationSpec& spec,
                                            double tail_mass,
                                            const QuadratureSpec& quad) {
    p.validate();
    spec.validate();
    FluctuationContext ctx;
    ctx.source = p;
    ctx.spec = spec;
    ctx.nominal = build_stats(p, tail_mass, 64, quad);
    ctx.Pnc_obs = ctx.nominal.P_noclick;
    ctx.consistent =
        consistent_intervals(p, spec, ctx.nominal.n_cut, ctx.Pnc_obs, quad);
    if (!ctx.consistent.empty()) ctx.q = q_ratios(ctx.consistent);
    return ctx;
}

FluctuationResult fluctuation_pipeline(const FluctuationContext& ctx,
                                       const ChannelParams& ch,
                                       const ProtocolParams& proto,
                                       const EstimatorVariants& variants) {
    FluctuationResult res;

    if (ctx.spec.is_zero()) {
        // Shared code path: the collapse to the no-fluctuation result is
        // exact, not merely within tolerance.
        const PassiveResult pr =
            passive_pipeline(ctx.nominal, ch, proto, variants.qber);
        res.collapsed_to_passive = true;
        res.obs = pr.obs;
        res.vacuous = pr.vacuous;
        res.R_c = pr.R_c;
        res.R_nc = pr.R_nc;
        res.R = variants.unclamped_total ? pr.R_c + pr.R_nc : pr.R;
        res.bounds.q0 = ctx.q.q0;
        res.bounds.q1 = ctx.q.q1;
        res.bounds.q2 = ctx.q.q2;
        res.bounds.q_star = ctx.q.q_star;
        const auto& st = ctx.nominal;
        if (!pr.vacuous) {
            res.bounds.Delta1c_L =
                clamp01(pr.bounds.Y1_L * st.p_click[1] / pr.obs.Q_c);
            res.bounds.Delta1nc_L =
                clamp01(pr.bounds.Y1_L * st.p_noclick[1] / pr.obs.Q_nc);
            res.bounds.Y1c_L = pr.bounds.Y1_L;
            res.bounds.e1c_U = pr.bounds.e1_U;
            res.bounds.e1_clamped = pr.bounds.e1_clamped;
        }
        res.bounds.Delta0c_L = clamp01(ch.Y0 * st.p_click[0] / pr.obs.Q_c);
        res.bounds.Delta0nc_L = clamp01(ch.Y0 * st.p_noclick[0] / pr.obs.Q_nc);
        return res;
    }

    res.obs = observables(ctx.nominal, ch, variants.qber);
    if (ctx.consistent.empty()) {
        res.observation_inconsistent = true;
        res.vacuous = true;
        return res;
    }

    const DeltaBoundsClick db =
        delta_bounds_click(res.obs, ctx.consistent, ctx.q, ch.Y0);
    res.bounds.q0 = ctx.q.q0;
    res.bounds.q1 = ctx.q.q1;
    res.bounds.q2 = ctx.q.q2;
    res.bounds.q_star = ctx.q.q_star;
    res.bounds.Delta1c_L = db.Delta1c_L;
    res.bounds.Delta0c_L = db.Delta0c_L;
    res.bounds.chain_applicable = db.chain_applicable;

    if (!(db.Delta1c_L > 0.0)) {
        res.vacuous = true;
        res.bounds.e1c_U = 1.0;
    } else {
        bool cl = false;
        const double c1 = e1_click_upper(res.obs, db.Delta1c_L, db.Delta0c_L,
                                         variants.simplified_e1, &cl);
        // The no-click and cross-class candidates tighten the bound; each is
        // worst-cased over the admissible set, so the min stays one-sided.
        double c2w = -kInf, c3w = -kInf;
        bool any_c3 = false;
        if (db.Y1_worst > 0.0) {
            for (const auto& node : ctx.consistent.consistent_nodes) {
                const E1Candidates c =
                    e1_candidates(node, res.obs, ch.Y0, db.Y1_worst);
                c2w = std::max(c2w, c.c2);
                if (std::isfinite(c.c3)) {
                    c3w = std::max(c3w, c.c3);
                    any_c3 = true;
                }
            }
        }
        double e1 = c1;
        if (db.Y1_worst > 0.0) e1 = std::min(e1, c2w);
        if (any_c3) e1 = std::min(e1, c3w);
        const double clamped = clamp01(e1);
        res.bounds.e1c_U = clamped;
        res.bounds.e1_clamped = cl || clamped != e1;
    }

    const TransferBounds tb = transfer_to_noclick(
        res.obs, ctx.consistent, db.Delta1c_L, db.Delta0c_L, ch.Y0,
        variants.literal_transfer_numerator);
    res.bounds.Y1c_L = tb.Y1c_L;
    res.bounds.Delta1nc_L = tb.Delta1nc_L;
    res.bounds.Delta0nc_L = tb.Delta0nc_L;

    const FluctRates fr = rates_with_fluctuation(res.obs, res.bounds, proto,
                                                 variants.unclamped_total);
    res.R = fr.R;
    res.R_c = fr.R_c;
    res.R_nc = fr.R_nc;
    return res;
}

}  // namespace pdqkd
