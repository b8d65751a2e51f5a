#pragma once

#include "pdqkd/source_stats.hpp"

namespace pdqkd {

struct ChannelParams {
    double alpha = 0.21;     // fiber loss, dB/km
    double distance = 30.0;  // km
    double eta_bob = 0.045;  // Bob apparatus transmittance
    double Y0 = 1.7e-6;      // background yield
    double e_d = 0.033;      // misalignment error probability
    double e0 = 0.5;         // background error rate, fixed

    void validate() const;  // throws domain_error
};

// Per-pulse gains and QBERs, split by the source tag. Additivity holds by
// construction: Q_c + Q_nc = Q_t and E_c Q_c + E_nc Q_nc = E_t Q_t.
struct Observables {
    double Q_t, Q_c, Q_nc;
    double E_t, E_c, E_nc;
};

enum class QberConvention {
    // E_nc from the weighted error identity; E_c recovered from it.
    weighted_consistent,
    // Legacy closed forms E_nc = (e0-e_d) Y0 / P_noclick + e_d and
    // E_c = E_t - E_nc, which break the weighted identity; kept only for
    // validation-mode comparison.
    legacy_literal,
};

double eta_channel(double alpha, double distance);
double eta_sys(const ChannelParams& ch);

// 1 - (1-Y0)(1-eta_sys)^n, nondecreasing in n.
double yield_n(int n, double Y0, double eta_sys);

// Closed-form gains; also reconstructs each gain from the per-n series and
// raises consistency_error if the difference leaves [0, tail_total] (the
// series can only undershoot by the truncated tail, never overshoot).
struct Gains {
    double Q_t, Q_c, Q_nc;
    double series_Q_t, series_Q_nc;  // truncated sums, for diagnostics
};
Gains gains(const PhotonNumberStats& stats, const ChannelParams& ch);

// QBERs per outcome from the error model e_n Y_n = e0 Y0 + e_d (Y_n - Y0).
// Throws degenerate_error when a gain divisor is zero.
void qbers(const PhotonNumberStats& stats, const ChannelParams& ch,
           const Gains& g, double& E_t, double& E_c, double& E_nc,
           QberConvention conv = QberConvention::weighted_consistent);

Observables observables(const PhotonNumberStats& stats,
                        const ChannelParams& ch,
                        QberConvention conv = QberConvention::weighted_consistent);

// Ground truth of the generative model, for oracle-style checks.
double true_e_n(int n, const ChannelParams& ch, double eta);

}  // namespace pdqkd
