#pragma once

#include "pdqkd/passive_estimator.hpp"

namespace pdqkd {

// Relative half-widths of the intervals the true intensities are declared
// to lie in. grid_per_axis controls the box lattice used for plain interval
// extremization; slice_grid controls how many points sample the
// observation-consistent contour inside the box.
struct FluctuationSpec {
    double delta_mu1 = 0.0;
    double delta_mu2 = 0.0;
    int grid_per_axis = 21;
    int slice_grid = 41;

    void validate() const;  // throws domain_error outside [0, 0.5)
    bool is_zero() const { return delta_mu1 == 0.0 && delta_mu2 == 0.0; }
    // Half-widths above 0.10 are accepted but worth a caller-side warning.
    bool exceeds_studied_range() const {
        return delta_mu1 > 0.10 || delta_mu2 > 0.10;
    }
};

// Worst-case envelopes of the per-n click/no-click probabilities over a set
// of admissible intensity points. When observation_constrained is set, the
// set is the contour { P_noclick(mu') = observed } inside the declared box
// and the sampled points themselves are kept (consistent_nodes); otherwise
// it is the full box and only the envelopes are stored.
struct ProbabilityIntervals {
    int n_cut = 0;
    std::vector<double> pc_L, pc_U;    // p_n^click, joint convention
    std::vector<double> pnc_L, pnc_U;  // p_n^noclick
    double Pc_L = 0.0, Pc_U = 0.0;
    double Pnc_L = 0.0, Pnc_U = 0.0;
    double tail_upper = 0.0;  // max over sampled points of mass beyond n_cut
    bool observation_constrained = false;
    std::vector<PhotonNumberStats> consistent_nodes;

    bool empty() const;  // no admissible point sampled
};

// Box envelopes: grid_per_axis x grid_per_axis lattice including the
// corners, then one half-step refinement pass around each incumbent
// extremum. delta = 0 collapses every interval to the nominal value.
ProbabilityIntervals probability_intervals(const SourceParams& p,
                                           const FluctuationSpec& spec,
                                           int n_cut,
                                           const QuadratureSpec& quad = {});

// Envelopes over the observation-consistent contour: intensity points in
// the box whose aggregate no-click probability equals Pnc_obs. Sampled by
// slicing one axis and root-solving the other. May be empty (observation
// incompatible with the declared box).
ProbabilityIntervals consistent_intervals(const SourceParams& p,
                                          const FluctuationSpec& spec,
                                          int n_cut, double Pnc_obs,
                                          const QuadratureSpec& quad = {});

// Worst-case click/no-click probability ratios q_m = pc_L[m] / pnc_U[m].
// The commonly assumed orderings (q_m <= q1 for m >= 1, q2 < q0) are
// checked, not assumed; violations flip the diagnostics flags.
struct QRatios {
    double q0 = 0.0, q1 = 0.0, q2 = 0.0, q_star = 0.0;
    std::vector<double> q_all;  // m = 0..n_cut
    bool q1_dominates = true;
    bool q2_below_q0 = true;
};
QRatios q_ratios(const ProbabilityIntervals& iv);

// Single-photon click-fraction lower bound from the conditional-gain
// difference chain. Sound, but the multiphoton penalty usually dwarfs the
// tiny conditional-gain gap between the two outcome classes, so the chain
// clamps to 0 at realistic parameters; delta_bounds_click therefore takes
// the better of this and the direct yield floor. Kept separately callable
// so its clamp behavior stays testable.
double chain_delta1_click(const Observables& obs,
                          const ProbabilityIntervals& iv, const QRatios& q,
                          bool* applicable = nullptr, double e0 = 0.5);

struct DeltaBoundsClick {
    double Delta1c_L = 0.0;
    double Delta0c_L = 0.0;
    double Y1_worst = 0.0;  // min passive yield bound over consistent nodes
    double chain_value = 0.0;
    double floor_value = 0.0;
    bool chain_applicable = false;
};

// Lower bounds on the single-photon and vacuum fractions of click events.
// Delta1c_L = max(chain bound, Y1_worst * pc_L[1] / Q_c); the floor term
// needs consistent_nodes and is 0 for plain box intervals.
// Throws convention_error when q0 >= 1 (the chain's sign convention needs
// clicks to be the rare outcome) and degenerate_error on zero gains.
DeltaBoundsClick delta_bounds_click(const Observables& obs,
                                    const ProbabilityIntervals& iv,
                                    const QRatios& q, double Y0);

// (E_c - e0 * Delta0c_L) / Delta1c_L clamped to [0,1]; simplified variant
// drops the vacuum subtraction (always looser, never tighter).
double e1_click_upper(const Observables& obs, double Delta1c_L,
                      double Delta0c_L, bool simplified = false,
                      bool* clamped = nullptr, double e0 = 0.5);

struct TransferBounds {
    double Y1c_L = 0.0;
    double Delta1nc_L = 0.0;
    double Delta0nc_L = 0.0;
};

// Moves the click-side single-photon bound to the no-click class through
// the shared yield: Y1c_L = Delta1c_L Q_c / pc_U[1], then
// Delta1nc_L = Y1c_L pnc_L[1] / Q_nc. literal_numerator uses pnc_U[1]
// instead (legacy variant; breaks one-sidedness, validation only).
TransferBounds transfer_to_noclick(const Observables& obs,
                                   const ProbabilityIntervals& iv,
                                   double Delta1c_L, double Delta0c_L,
                                   double Y0,
                                   bool literal_numerator = false);

struct FluctuationBounds {
    double q0 = 0.0, q1 = 0.0, q2 = 0.0, q_star = 0.0;
    double Delta1c_L = 0.0, Delta0c_L = 0.0;
    double e1c_U = 1.0;
    double Delta1nc_L = 0.0, Delta0nc_L = 0.0;
    double Y1c_L = 0.0;
    bool e1_clamped = false;
    bool chain_applicable = false;
};

struct FluctRates {
    double R = 0.0, R_c = 0.0, R_nc = 0.0;
};

// R_l = q Q_l { Delta0l + Delta1l (1 - H2(e1)) - f H2(E_l) }, summed with
// per-class clamping (or without it when unclamped_total is set).
FluctRates rates_with_fluctuation(const Observables& obs,
                                  const FluctuationBounds& b,
                                  const ProtocolParams& proto,
                                  bool unclamped_total = false);

// Estimator variants kept for validation-mode comparison. Defaults are the
// sound forms the acceptance checks run against.
struct EstimatorVariants {
    QberConvention qber = QberConvention::weighted_consistent;
    bool literal_transfer_numerator = false;
    bool simplified_e1 = false;
    bool unclamped_total = false;
};

// Everything about the source side that a fluctuation run needs; it only
// depends on the source and the declared half-widths (the observed no-click
// probability is Alice-local), so one context serves a whole distance sweep.
struct FluctuationContext {
    SourceParams source;
    FluctuationSpec spec;
    PhotonNumberStats nominal;
    ProbabilityIntervals consistent;
    QRatios q;
    double Pnc_obs = 0.0;
};

FluctuationContext make_fluctuation_context(const SourceParams& p,
                                            const FluctuationSpec& spec,
                                            double tail_mass = 1e-9,
                                            const QuadratureSpec& quad = {});

struct FluctuationResult {
    double R = 0.0, R_c = 0.0, R_nc = 0.0;
    FluctuationBounds bounds{};
    Observables obs{};
    bool vacuous = false;
    bool observation_inconsistent = false;
    bool collapsed_to_passive = false;  // delta = 0 shares the passive path
};

// Worst-case rate pipeline. delta = 0 routes through the passive pipeline
// itself, so the collapse to the no-fluctuation result is exact rather
// than within rounding.
FluctuationResult fluctuation_pipeline(const FluctuationContext& ctx,
                                       const ChannelParams& ch,
                                       const ProtocolParams& proto,
                                       const EstimatorVariants& variants = {});

}  // namespace pdqkd
