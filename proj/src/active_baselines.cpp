#include "pdqkd/active_baselines.hpp"

#include "pdqkd/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace pdqkd {

void ActiveDecoyParams::validate() const {
    if (!(mu_signal > 0.0) || !(nu_decoy > 0.0) || !(nu_decoy < mu_signal))
        throw domain_error("ActiveDecoyParams: need 0 < nu_decoy < mu_signal");
    if (!(delta >= 0.0 && delta < 0.5))
        throw domain_error("ActiveDecoyParams: delta outside [0, 0.5)");
}

ActiveObservation active_gains_qbers(const ActiveDecoyParams& params,
                                     const ChannelParams& ch) {
    params.validate();
    ch.validate();
    const double eta = eta_sys(ch);
    auto gain_qber = [&](double mu, double& Q, double& E) {
        Q = 1.0 - (1.0 - ch.Y0) * std::exp(-eta * mu);
        E = (ch.e_d * Q + (ch.e0 - ch.e_d) * ch.Y0) / Q;
    };
    ActiveObservation obs;
    gain_qber(params.mu_signal, obs.Q_mu, obs.E_mu);
    gain_qber(params.nu_decoy, obs.Q_nu, obs.E_nu);
    return obs;
}

ActiveBounds active_bounds(double mu, double nu, const ActiveObservation& obs,
                           double Y0, bool include_vacuum, double e0) {
    if (!(mu > 0.0) || !(nu > 0.0) || !(nu < mu))
        throw domain_error("active_bounds: need 0 < nu < mu");
    ActiveBounds b;
    if (include_vacuum) {
        b.Y0_L = b.Y0_U = Y0;
    } else {
        b.Y0_L = 0.0;
        b.Y0_U = obs.E_nu * obs.Q_nu * std::exp(nu) / e0;
    }
    const double Y1 =
        (mu / (mu * nu - nu * nu)) *
        (obs.Q_nu * std::exp(nu) - obs.Q_mu * std::exp(mu) * nu * nu / (mu * mu) -
         ((mu * mu - nu * nu) / (mu * mu)) * b.Y0_U);
    if (Y1 <= 0.0) {
        b.vacuous = true;
        return b;
    }
    b.Y1_L = Y1;
    b.e1_U = std::clamp(
        (obs.E_nu * obs.Q_nu * std::exp(nu) - e0 * b.Y0_L) / (Y1 * nu), 0.0,
        1.0);
    return b;
}

ActiveResult active_rate(const ActiveDecoyParams& params,
                         const ChannelParams& ch, const ProtocolParams& proto) {
    params.validate();
    proto.validate();
    const ActiveObservation obs = active_gains_qbers(params, ch);

    std::vector<double> mus, nus;
    if (params.delta == 0.0) {
        mus = {params.mu_signal};
        nus = {params.nu_decoy};
    } else {
        mus = {params.mu_signal * (1.0 - params.delta),
               params.mu_signal * (1.0 + params.delta)};
        nus = {params.nu_decoy * (1.0 - params.delta),
               params.nu_decoy * (1.0 + params.delta)};
    }

    ActiveResult res;
    res.Y1_L = std::numeric_limits<double>::infinity();
    res.e1_U = 0.0;
    for (double m : mus)
        for (double n : nus) {
            const ActiveBounds b =
                active_bounds(m, n, obs, ch.Y0, params.include_vacuum, ch.e0);
            res.Y1_L = std::min(res.Y1_L, b.Y1_L);
            res.e1_U = std::max(res.e1_U, b.e1_U);
            res.vacuous = res.vacuous || b.vacuous;
        }
    if (res.vacuous || res.Y1_L <= 0.0) {
        res.Y1_L = 0.0;
        res.e1_U = 1.0;
        res.vacuous = true;
        res.R = 0.0;
        return res;
    }

    const double Y0_L = params.include_vacuum ? ch.Y0 : 0.0;
    double p0 = std::numeric_limits<double>::infinity();
    double p1 = std::numeric_limits<double>::infinity();
    for (double m : mus) {
        p0 = std::min(p0, std::exp(-m));
        p1 = std::min(p1, m * std::exp(-m));
    }
    const double R = proto.q_sifting *
                     (p0 * Y0_L + p1 * res.Y1_L * (1.0 - binary_entropy(res.e1_U)) -
                      obs.Q_mu * proto.f_ec * binary_entropy(obs.E_mu));
    res.R = std::max(R, 0.0);
    return res;
}

}  // namespace pdqkd
