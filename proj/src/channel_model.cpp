#include "pdqkd/channel_model.hpp"

#include <cmath>

namespace pdqkd {

void ChannelParams::validate() const {
    if (!(alpha >= 0.0)) throw domain_error("ChannelParams: alpha < 0");
    if (!(distance >= 0.0)) throw domain_error("ChannelParams: distance < 0");
    if (!(eta_bob >= 0.0 && eta_bob <= 1.0))
        throw domain_error("ChannelParams: eta_bob outside [0,1]");
    if (!(Y0 >= 0.0 && Y0 <= 1.0))
        throw domain_error("ChannelParams: Y0 outside [0,1]");
    if (!(e_d >= 0.0 && e_d <= 0.5))
        throw domain_error("ChannelParams: e_d outside [0,0.5]");
    if (e0 != 0.5) throw domain_error("ChannelParams: e0 must be 0.5");
}

double eta_channel(double alpha, double distance) {
    if (!(alpha >= 0.0) || !(distance >= 0.0))
        throw domain_error("eta_channel: negative argument");
    return std::pow(10.0, -alpha * distance / 10.0);
}

double eta_sys(const ChannelParams& ch) {
    return ch.eta_bob * eta_channel(ch.alpha, ch.distance);
}

double yield_n(int n, double Y0, double eta) {
    if (n < 0) throw domain_error("yield_n: negative n");
    return 1.0 - (1.0 - Y0) * std::pow(1.0 - eta, n);
}

Gains gains(const PhotonNumberStats& stats, const ChannelParams& ch) {
    ch.validate();
    const auto& d = stats.derived;
    const auto& p = stats.params;
    const double es = eta_sys(ch);
    const double Y0 = ch.Y0;

    Gains g;
    g.Q_t = 1.0 - (1.0 - Y0) * std::exp(-es * d.w_a) * bessel_i0(es * d.xi);
    g.Q_nc = stats.P_noclick -
             (1.0 - p.eps_dark) * (1.0 - Y0) *
                 std::exp(-p.eta_d * d.w_b - es * d.w_a) *
                 bessel_i0((p.eta_d - es) * d.xi);
    g.Q_c = g.Q_t - g.Q_nc;

    g.series_Q_t = 0.0;
    g.series_Q_nc = 0.0;
    for (int n = 0; n <= stats.n_cut; ++n) {
        const double yn = yield_n(n, Y0, es);
        g.series_Q_t += stats.p_total[n] * yn;
        g.series_Q_nc += stats.p_noclick[n] * yn;
    }
    // Truncation can only lose the tail's detections (at most tail_total,
    // since yields are <= 1); anything outside that window is a bug.
    const double slack = 1e-12;
    const double dt = g.Q_t - g.series_Q_t;
    const double dn = g.Q_nc - g.series_Q_nc;
    if (dt < -slack || dt > stats.tail_total + slack || dn < -slack ||
        dn > stats.tail_total + slack)
        throw consistency_error("gains: series and closed form disagree");
    return g;
}

void qbers(const PhotonNumberStats& stats, const ChannelParams& ch,
           const Gains& g, double& E_t, double& E_c, double& E_nc,
           QberConvention conv) {
    if (g.Q_t <= 0.0 || g.Q_nc <= 0.0 || g.Q_c <= 0.0)
        throw degenerate_error("qbers: zero gain divisor");
    const double bg = (ch.e0 - ch.e_d) * ch.Y0;
    E_t = bg / g.Q_t + ch.e_d;
    if (conv == QberConvention::weighted_consistent) {
        E_nc = (bg * stats.P_noclick + ch.e_d * g.Q_nc) / g.Q_nc;
        E_c = (E_t * g.Q_t - E_nc * g.Q_nc) / g.Q_c;
    } else {
        E_nc = bg / stats.P_noclick + ch.e_d;
        E_c = E_t - E_nc;
    }
}

Observables observables(const PhotonNumberStats& stats,
                        const ChannelParams& ch, QberConvention conv) {
    const Gains g = gains(stats, ch);
    Observables o;
    o.Q_t = g.Q_t;
    o.Q_c = g.Q_c;
    o.Q_nc = g.Q_nc;
    qbers(stats, ch, g, o.E_t, o.E_c, o.E_nc, conv);
    return o;
}

double true_e_n(int n, const ChannelParams& ch, double eta) {
    const double yn = yield_n(n, ch.Y0, eta);
    if (yn <= 0.0) throw degenerate_error("true_e_n: zero yield");
    return (ch.e0 * ch.Y0 + ch.e_d * (yn - ch.Y0)) / yn;
}

}  // namespace pdqkd
