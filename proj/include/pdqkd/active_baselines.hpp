#pragma once

#include "pdqkd/channel_model.hpp"
#include "pdqkd/passive_estimator.hpp"

namespace pdqkd {

// Actively modulated decoy protocols used as comparison baselines: a
// signal/decoy intensity pair, optionally with a measured vacuum level
// (three-intensity). Intensity fluctuations enter as a relative half-width
// around each declared level.
struct ActiveDecoyParams {
    double mu_signal = 0.5;
    double nu_decoy = 0.05;
    bool include_vacuum = true;  // false: two-intensity, vacuum yield worst-cased
    double delta = 0.0;
    void validate() const;
};

struct ActiveObservation {
    double Q_mu = 0.0, E_mu = 0.0;
    double Q_nu = 0.0, E_nu = 0.0;
};

// Asymptotic gain and QBER of a phase-randomized WCP of the given intensity.
ActiveObservation active_gains_qbers(const ActiveDecoyParams& params,
                                     const ChannelParams& ch);

struct ActiveBounds {
    double Y1_L = 0.0;
    double e1_U = 1.0;
    double Y0_L = 0.0;
    double Y0_U = 0.0;
    bool vacuous = false;
};

// Single-photon bounds for assumed intensities (mu, nu) against the fixed
// observation. mu/nu may sit anywhere in the fluctuation box; the observation
// does not move with them.
ActiveBounds active_bounds(double mu, double nu, const ActiveObservation& obs,
                           double Y0, bool include_vacuum, double e0 = 0.5);

struct ActiveResult {
    double R = 0.0;
    double Y1_L = 0.0;
    double e1_U = 1.0;
    bool vacuous = false;
};

// Worst case over the four (mu, nu) fluctuation corners, then GLLP.
ActiveResult active_rate(const ActiveDecoyParams& params,
                         const ChannelParams& ch, const ProtocolParams& proto);

}  // namespace pdqkd
