#pragma once

#include "pdqkd/config.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>

namespace pdqkd {

// Random-parameter self-check of the statistics and gain layer: per-n
// click/no-click additivity, normalization, series vs closed forms, and
// QBER weighting identities. Used by `validate` and by the acceptance gate.
struct ConsistencyReport {
    int points = 0;
    int failures = 0;
    std::string first_failure;
};
ConsistencyReport consistency_grid(int points, std::uint64_t seed);

// Subcommand entry points. Tabular output goes to `out`, warnings and
// timings to `diag`. Returned value is the process exit code: 0 ok,
// 1 invariant violation, 3 beyond-cutoff. Config errors throw config_error.
int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& diag);
int cmd_compare(const RunConfig& cfg, std::ostream& out, std::ostream& diag);
int cmd_validate(const RunConfig& cfg, std::ostream& out, std::ostream& diag);

}  // namespace pdqkd
