#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace pdqkd {

// Error taxonomy. Everything derives from error so callers can catch the
// library as a whole; the concrete types mirror the failure modes the
// operations document.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct domain_error : error {
    using error::error;
};
struct convergence_error : error {
    double previous, last;
    convergence_error(const std::string& what, double prev, double cur)
        : error(what), previous(prev), last(cur) {}
};
struct consistency_error : error {
    using error::error;
};
struct degenerate_error : error {
    using error::error;
};
struct undefined_bound_error : error {
    using error::error;
};
struct truncation_error : error {
    using error::error;
};
struct convention_error : error {
    using error::error;
};
struct config_error : error {
    using error::error;
};

// Equally spaced theta samples on [0, 2pi), doubled until two successive
// refinements agree to relative_tolerance. Spectrally accurate for the
// smooth periodic integrands this library produces.
struct QuadratureSpec {
    int node_count = 64;           // >= 16
    int refinement_limit = 7;      // doublings allowed
    double relative_tolerance = 1e-13;
};

// I0(z): power series for |z| <= 15, asymptotic expansion above.
// Relative error <= 1e-12 for |z| <= 50. Throws domain_error on non-finite z.
double bessel_i0(double z);

// Mean of f over [0, 2pi). Throws convergence_error (carrying the last two
// estimates) if the refinement limit is hit without meeting the tolerance.
double periodic_quadrature(const std::function<double(double)>& f,
                           const QuadratureSpec& spec = {});

// H2(x) with H2(0) = H2(1) = 0. Throws domain_error outside [0,1].
double binary_entropy(double x);

// e^-mean mean^n / n!, in log space for n > 20. Throws domain_error on
// negative or non-finite mean.
double poisson_pmf(int n, double mean);

// Brent root bracketing solver; f(lo) and f(hi) must differ in sign.
// Converges to ~4 ulp. Used for tracing observation-consistent intensity
// contours; not part of the public estimator surface.
double find_root(const std::function<double(double)>& f, double lo, double hi);

// Deterministic splitmix64 stream. Different (seed, stream) pairs land at
// hashed, scattered counter offsets, so per-trial/per-instance substreams are
// independent of how work is partitioned across workers.
struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t seed, std::uint64_t stream = 0);
    std::uint64_t next();
    double uniform();  // [0, 1)
    double uniform(double lo, double hi);
};

}  // namespace pdqkd
