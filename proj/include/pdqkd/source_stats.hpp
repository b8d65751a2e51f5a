#pragma once

#include <vector>

#include "pdqkd/numerics.hpp"

namespace pdqkd {

// Two phase-randomized weak coherent pulses interfered on a beam splitter
// of transmittance t; output mode a goes to the channel, mode b to a local
// threshold detector with efficiency eta_d and dark-count probability
// eps_dark. The detector outcome (click / no click) tags each pulse.
struct SourceParams {
    double mu1 = 0.5;
    double mu2 = 1e-4;
    double t = 0.5;
    double eta_d = 0.12;
    double eps_dark = 3.2e-7;

    void validate() const;  // throws domain_error
};

struct DerivedSourceParams {
    double nu;   // mu1 + mu2
    double xi;   // 2 sqrt(mu1 mu2 (1-t) t), interference amplitude
    double w_a;  // mu1 t + mu2 (1-t), mean photons into the channel
    double w_b;  // mu1 (1-t) + mu2 t, mean photons onto the tag detector
};

DerivedSourceParams derive(const SourceParams& p);

// Fraction of the total intensity emerging in mode a at relative phase
// theta; always in [0,1].
double gamma_fraction(const DerivedSourceParams& d, double theta);

// Per-n probabilities of the tagged photon-number distribution in mode a.
// "total" marginalizes over the detector, "noclick"/"click" are joint with
// the tag outcome, so p_click[n] + p_noclick[n] = p_total[n].
struct PhotonNumberStats {
    SourceParams params;
    DerivedSourceParams derived;
    int n_cut = 0;
    std::vector<double> p_total;    // index 0..n_cut
    std::vector<double> p_noclick;
    std::vector<double> p_click;
    double P_noclick = 0.0;  // aggregate no-click probability, closed form
    double P_click = 0.0;
    double tail_total = 0.0;  // 1 - sum(p_total), mass beyond n_cut
};

double p_total(int n, const SourceParams& p, const QuadratureSpec& quad = {});
double p_noclick(int n, const SourceParams& p, const QuadratureSpec& quad = {});
// Clamps rounding-level negatives (> -1e-14) to zero; larger negatives
// indicate a broken quadrature and raise consistency_error.
double p_click(int n, const SourceParams& p, const QuadratureSpec& quad = {});

// Joint probability of n photons in mode a and m in mode b.
double joint_prob(int n, int m, const SourceParams& p,
                  const QuadratureSpec& quad = {});

// Closed form (1-eps) e^{-eta_d w_b} I0(eta_d xi).
double noclick_aggregate(const SourceParams& p);

// Builds all arrays in one theta sweep. n_cut is the smallest order with
// Sum p_total >= 1 - tail_mass; exceeding hard_cap raises truncation_error.
PhotonNumberStats build_stats(const SourceParams& p, double tail_mass = 1e-9,
                              int hard_cap = 64,
                              const QuadratureSpec& quad = {});

// Fixed-order variant: arrays exactly 0..n_cut, whatever tail that leaves.
// Lattices of nearby intensity points use this so entries stay aligned.
PhotonNumberStats build_stats_fixed(const SourceParams& p, int n_cut,
                                    const QuadratureSpec& quad = {});

}  // namespace pdqkd
