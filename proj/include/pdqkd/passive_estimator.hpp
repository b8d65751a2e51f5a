#pragma once

#include "pdqkd/channel_model.hpp"

namespace pdqkd {

struct ProtocolParams {
    double q_sifting = 0.5;  // basis-match fraction (1/2 for BB84)
    double f_ec = 1.22;      // error-correction inefficiency

    void validate() const;
};

struct PassiveBounds {
    double Y1_L = 0.0;
    double e1_U = 1.0;
    bool e1_clamped = false;
};

// Single-photon yield lower bound from the click/no-click statistics up to
// order 2. The denominator p2t p1nc - p2nc p1t is signed (negative at the
// default source); the ratio is taken as-is and clamped at 0. A denominator
// within 1e-18 of zero (proportional statistics, e.g. xi = 0) raises
// degenerate_error.
double y1_lower(const PhotonNumberStats& stats, const Observables& obs,
                double Y0);

// The three candidate upper bounds on e1 whose minimum is the estimate.
// Candidates with vanishing denominators are reported as +infinity.
struct E1Candidates {
    double c1, c2, c3;
    double min() const;
};
E1Candidates e1_candidates(const PhotonNumberStats& stats,
                           const Observables& obs, double Y0, double Y1,
                           double e0 = 0.5);

// min of the candidates, clamped to [0,1]; clamping is flagged, never
// silent. Y1_L <= 0 raises undefined_bound_error (caller treats R as 0).
double e1_upper(const PhotonNumberStats& stats, const Observables& obs,
                double Y0, double Y1_L, bool* clamped = nullptr);

// GLLP rate contribution of one outcome class; may be negative.
double rate_per_outcome(bool click, const PhotonNumberStats& stats,
                        const Observables& obs, const PassiveBounds& bounds,
                        const ChannelParams& ch, const ProtocolParams& proto);

// max(R_c, 0) + max(R_nc, 0).
double total_rate(const PhotonNumberStats& stats, const Observables& obs,
                  const PassiveBounds& bounds, const ChannelParams& ch,
                  const ProtocolParams& proto);

struct PassiveResult {
    double R = 0.0, R_c = 0.0, R_nc = 0.0;
    PassiveBounds bounds;
    Observables obs{};
    bool vacuous = false;  // Y1 bound hit 0; rate forced to 0
};

// Full no-fluctuation pipeline at one channel setting.
PassiveResult passive_pipeline(const PhotonNumberStats& stats,
                               const ChannelParams& ch,
                               const ProtocolParams& proto,
                               QberConvention conv = QberConvention::weighted_consistent);

}  // namespace pdqkd
