#pragma once

#include "pdqkd/channel_model.hpp"
#include "pdqkd/fluctuation.hpp"
#include "pdqkd/passive_estimator.hpp"
#include "pdqkd/source_stats.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pdqkd {

enum class SweepAxis { distance, delta };
enum class OutputFormat { csv, jsonl };

// One flat bag of knobs for the CLI. Defaults reproduce the reference
// operating point; everything is overridable from a key=value config file
// or --set flags, and serialize/parse round-trips exactly.
struct RunConfig {
    // source
    double mu1 = 0.5;
    double mu2 = 1e-4;
    double t = 0.5;
    double eta_d = 0.12;
    double eps_dark = 3.2e-7;
    // channel
    double alpha = 0.21;
    double distance = 30.0;
    double eta_bob = 0.045;
    double Y0 = 1.7e-6;
    double e_d = 0.033;
    double e0 = 0.5;
    // protocol
    double q_sifting = 0.5;
    double f_ec = 1.22;
    // fluctuation
    double delta_mu1 = 0.0;
    double delta_mu2 = 0.0;
    int grid_per_axis = 21;
    int slice_grid = 41;
    // active baselines
    double active_mu = 0.5;
    double active_nu = 0.05;
    // sweep grid
    SweepAxis axis = SweepAxis::distance;
    double axis_start = 1.0;
    double axis_stop = 150.0;
    double axis_step = 1.0;
    // compare
    std::vector<double> compare_deltas = {0.02, 0.05};
    int compare_distance_max = 150;
    int cutoff_scan_max = 250;
    // numerics
    double tail_mass = 1e-9;
    // validate workloads
    std::uint64_t mc_trials = 1000000;
    int battery_instances = 100;
    bool negative_control = false;
    // estimator variant toggles
    bool qber_literal = false;
    bool simplified_e1 = false;
    bool unclamped_total = false;
    // io
    std::string out;  // empty: stdout
    OutputFormat format = OutputFormat::csv;
    std::uint64_t seed = 1;
    int jobs = 1;

    bool operator==(const RunConfig&) const = default;

    SourceParams source() const;
    ChannelParams channel() const;
    ProtocolParams protocol() const;
    FluctuationSpec fluctuation() const;
    EstimatorVariants variants() const;

    // Throws config_error on out-of-range values or an empty/backward grid.
    void validate() const;
};

// key=value per line, '#' starts a comment. Unknown keys and malformed
// values throw config_error.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);
void apply_override(RunConfig& cfg, const std::string& key,
                    const std::string& value);
std::string serialize_config(const RunConfig& cfg);

// %.17g, locale-independent. Shared by config and row output.
std::string format_double(double v);

}  // namespace pdqkd
