#pragma once

#include "pdqkd/channel_model.hpp"
#include "pdqkd/source_stats.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace pdqkd {

// Photon-level simulation of one pulse pair: Alice's monitor arm and Bob's
// detection. Ground truth for the analytic statistics and the bound batteries.

inline constexpr int kMcTrackedN = 8;  // per-photon-number tallies 0..8, then overflow

// Pure integer tallies so partial results merge associatively and the final
// report is independent of the worker partition.
struct McTally {
    std::uint64_t trials = 0;
    std::uint64_t clicks = 0;
    std::uint64_t detect_click = 0, detect_noclick = 0;
    std::uint64_t error_click = 0, error_noclick = 0;
    std::array<std::uint64_t, kMcTrackedN + 2> n_click{}, n_noclick{};
    std::uint64_t sum_na = 0, sum_na_sq = 0;
    void merge(const McTally& other);
};

struct McReport {
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
    McTally tally;
    double Q_t = 0, Q_t_se = 0;
    double Q_c = 0, Q_c_se = 0;
    double Q_nc = 0, Q_nc_se = 0;
    double E_t = 0, E_t_se = 0;
    double E_c = 0, E_c_se = 0;
    double E_nc = 0, E_nc_se = 0;
    std::array<double, kMcTrackedN + 2> freq_click{}, freq_click_se{};
    std::array<double, kMcTrackedN + 2> freq_noclick{}, freq_noclick_se{};
    double mean_na = 0, mean_na_se = 0;
};

// Deterministic for fixed (seed, trials, params) under any jobs count:
// every trial runs on its own hashed substream.
McReport run_trials(const SourceParams& source, const ChannelParams& channel,
                    std::uint64_t trials, std::uint64_t seed, int jobs = 1);

// Randomized honest instances: device parameters near their defaults, true
// intensities inside the declared fluctuation box, observations computed
// analytically at the truth. Every one-sided estimator bound is checked
// against the analytically known single-photon quantities. The negative
// control plants the truth outside the declared box and expects reports.
struct BatterySpec {
    int instances = 100;
    std::uint64_t seed = 1;
    double delta = 0.0;
    bool negative_control = false;
    double cushion = 1e-9;  // relative slack so fp roundoff is not a violation
};

struct BatteryViolation {
    int instance = 0;
    std::string check;
    double bound = 0.0;
    double truth = 0.0;
};

struct BatteryReport {
    int instances = 0;
    long checks = 0;
    long violation_count = 0;
    std::vector<BatteryViolation> violations;  // first few, for reporting
    bool passed() const { return violation_count == 0; }
};

BatteryReport soundness_battery(const BatterySpec& spec);

}  // namespace pdqkd
