#include "pdqkd/passive_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pdqkd {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void ProtocolParams::validate() const {
    if (!(q_sifting > 0.0 && q_sifting <= 1.0))
        throw domain_error("ProtocolParams: q_sifting outside (0,1]");
    if (!(f_ec >= 1.0)) throw domain_error("ProtocolParams: f_ec < 1");
}

double y1_lower(const PhotonNumberStats& stats, const Observables& obs,
                double Y0) {
    if (stats.n_cut < 2)
        throw degenerate_error("y1_lower: statistics truncated below n = 2");
    const auto& pt = stats.p_total;
    const auto& pnc = stats.p_noclick;
    const double den = pt[2] * pnc[1] - pnc[2] * pt[1];
    if (std::fabs(den) < 1e-18)
        throw degenerate_error(
            "y1_lower: proportional click/no-click statistics");
    const double num = pt[2] * obs.Q_nc - pnc[2] * obs.Q_t -
                       (pt[2] * pnc[0] - pnc[2] * pt[0]) * Y0;
    return std::max(num / den, 0.0);
}

E1Candidates e1_candidates(const PhotonNumberStats& stats,
                           const Observables& obs, double Y0, double Y1,
                           double e0) {
    const auto& pt = stats.p_total;
    const auto& pnc = stats.p_noclick;
    const auto& pc = stats.p_click;
    E1Candidates c{kInf, kInf, kInf};
    if (pc[1] * Y1 > 0.0)
        c.c1 = (obs.E_c * obs.Q_c - pc[0] * Y0 * e0) / (pc[1] * Y1);
    if (pnc[1] * Y1 > 0.0)
        c.c2 = (obs.E_nc * obs.Q_nc - pnc[0] * Y0 * e0) / (pnc[1] * Y1);
    const double den3 = (pt[1] * pnc[0] - pnc[1] * pt[0]) * Y1;
    if (den3 != 0.0)
        c.c3 = (pnc[0] * obs.E_t * obs.Q_t - pt[0] * obs.E_nc * obs.Q_nc) / den3;
    return c;
}

double E1Candidates::min() const { return std::min({c1, c2, c3}); }

double e1_upper(const PhotonNumberStats& stats, const Observables& obs,
                double Y0, double Y1_L, bool* clamped) {
    if (!(Y1_L > 0.0))
        throw undefined_bound_error("e1_upper: Y1 lower bound is 0");
    const double raw = e1_candidates(stats, obs, Y0, Y1_L).min();
    if (!std::isfinite(raw))
        throw undefined_bound_error("e1_upper: no finite candidate");
    const double out = std::clamp(raw, 0.0, 1.0);
    if (clamped) *clamped = out != raw;
    return out;
}

double rate_per_outcome(bool click, const PhotonNumberStats& stats,
                        const Observables& obs, const PassiveBounds& bounds,
                        const ChannelParams& ch, const ProtocolParams& proto) {
    proto.validate();
    const auto& p = click ? stats.p_click : stats.p_noclick;
    const double Q = click ? obs.Q_c : obs.Q_nc;
    const double E = click ? obs.E_c : obs.E_nc;
    return proto.q_sifting *
           (p[0] * ch.Y0 + p[1] * bounds.Y1_L * (1.0 - binary_entropy(bounds.e1_U)) -
            Q * proto.f_ec * binary_entropy(E));
}

double total_rate(const PhotonNumberStats& stats, const Observables& obs,
                  const PassiveBounds& bounds, const ChannelParams& ch,
                  const ProtocolParams& proto) {
    const double rc = rate_per_outcome(true, stats, obs, bounds, ch, proto);
    const double rnc = rate_per_outcome(false, stats, obs, bounds, ch, proto);
    return std::max(rc, 0.0) + std::max(rnc, 0.0);
}

PassiveResult passive_pipeline(const PhotonNumberStats& stats,
                               const ChannelParams& ch,
                               const ProtocolParams& proto,
                               QberConvention conv) {
    PassiveResult r;
    r.obs = observables(stats, ch, conv);
    r.bounds.Y1_L = y1_lower(stats, r.obs, ch.Y0);
    if (r.bounds.Y1_L <= 0.0) {
        r.vacuous = true;
        r.bounds.e1_U = 1.0;
        return r;
    }
    r.bounds.e1_U =
        e1_upper(stats, r.obs, ch.Y0, r.bounds.Y1_L, &r.bounds.e1_clamped);
    r.R_c = rate_per_outcome(true, stats, r.obs, r.bounds, ch, proto);
    r.R_nc = rate_per_outcome(false, stats, r.obs, r.bounds, ch, proto);
    r.R = std::max(r.R_c, 0.0) + std::max(r.R_nc, 0.0);
    return r;
}

}  // namespace pdqkd
