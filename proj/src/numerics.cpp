#include "pdqkd/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace pdqkd {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

double bessel_i0(double z) {
    if (!std::isfinite(z)) throw domain_error("bessel_i0: non-finite argument");
    z = std::fabs(z);
    if (z <= 15.0) {
        // Ascending series: sum_k (z^2/4)^k / (k!)^2.
        const double q = 0.25 * z * z;
        double term = 1.0, sum = 1.0;
        for (int k = 1; k < 400; ++k) {
            term *= q / (static_cast<double>(k) * k);
            sum += term;
            if (term < sum * 1e-17) return sum;
        }
        throw convergence_error("bessel_i0: series stalled", sum, term);
    }
    // Asymptotic expansion, truncated adaptively at the smallest term.
    // For z > 15 the smallest term is below 1e-12 relative, so stopping
    // there keeps the advertised accuracy.
    const double inv8z = 1.0 / (8.0 * z);
    double term = 1.0, sum = 1.0;
    for (int k = 0; k < 40; ++k) {
        const double odd = 2.0 * k + 1.0;
        const double next = term * odd * odd * inv8z / (k + 1.0);
        if (next >= term) break;  // divergent tail reached
        term = next;
        sum += term;
        if (term < sum * 1e-17) break;
    }
    return sum * std::exp(z) / std::sqrt(2.0 * kPi * z);
}

double periodic_quadrature(const std::function<double(double)>& f,
                           const QuadratureSpec& spec) {
    if (spec.node_count < 16)
        throw domain_error("periodic_quadrature: node_count < 16");
    if (spec.refinement_limit < 0 || !(spec.relative_tolerance > 0.0))
        throw domain_error("periodic_quadrature: bad refinement spec");

    int n = spec.node_count;
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += f(2.0 * kPi * j / n);
    double mean = acc / n;

    for (int r = 0; r < spec.refinement_limit; ++r) {
        // New nodes sit halfway between the old ones, so the old sum is
        // reused and each refinement costs only the new evaluations.
        double mid = 0.0;
        for (int j = 0; j < n; ++j) mid += f(2.0 * kPi * (j + 0.5) / n);
        mid /= n;
        const double refined = 0.5 * (mean + mid);
        const double scale = std::max(std::fabs(refined), std::fabs(mean));
        if (scale == 0.0 ||
            std::fabs(refined - mean) <= spec.relative_tolerance * scale)
            return refined;
        mean = refined;
        n *= 2;
    }
    // One last halving-step comparison failed; report both estimates.
    double mid = 0.0;
    for (int j = 0; j < n; ++j) mid += f(2.0 * kPi * (j + 0.5) / n);
    mid /= n;
    const double refined = 0.5 * (mean + mid);
    const double scale = std::max(std::fabs(refined), std::fabs(mean));
    if (scale == 0.0 ||
        std::fabs(refined - mean) <= spec.relative_tolerance * scale)
        return refined;
    throw convergence_error("periodic_quadrature: refinement limit reached",
                            mean, refined);
}

double binary_entropy(double x) {
    if (!std::isfinite(x) || x < 0.0 || x > 1.0)
        throw domain_error("binary_entropy: argument outside [0,1]");
    if (x == 0.0 || x == 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

double poisson_pmf(int n, double mean) {
    if (n < 0) throw domain_error("poisson_pmf: negative count");
    if (!std::isfinite(mean) || mean < 0.0)
        throw domain_error("poisson_pmf: invalid mean");
    if (mean == 0.0) return n == 0 ? 1.0 : 0.0;
    if (n <= 20) {
        double p = std::exp(-mean);
        for (int k = 1; k <= n; ++k) p *= mean / k;
        return p;
    }
    return std::exp(n * std::log(mean) - mean - std::lgamma(n + 1.0));
}

double find_root(const std::function<double(double)>& f, double lo,
                 double hi) {
    double a = lo, b = hi;
    double fa = f(a), fb = f(b);
    if (!std::isfinite(fa) || !std::isfinite(fb))
        throw domain_error("find_root: non-finite endpoint value");
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0.0) == (fb > 0.0))
        throw domain_error("find_root: endpoints do not bracket a root");

    // Brent's method: inverse quadratic / secant with bisection fallback.
    double c = a, fc = fa;
    double d = b - a, e = d;
    for (int iter = 0; iter < 200; ++iter) {
        if (std::fabs(fc) < std::fabs(fb)) {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        const double tol =
            2.0 * std::numeric_limits<double>::epsilon() * std::fabs(b) +
            0.5e-15;
        const double m = 0.5 * (c - b);
        if (std::fabs(m) <= tol || fb == 0.0) return b;
        if (std::fabs(e) < tol || std::fabs(fa) <= std::fabs(fb)) {
            d = m;
            e = m;
        } else {
            double p, q;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                const double qa = fa / fc, r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0)
                q = -q;
            else
                p = -p;
            if (2.0 * p < std::min(3.0 * m * q - std::fabs(tol * q),
                                   std::fabs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        }
        a = b;
        fa = fb;
        b += (std::fabs(d) > tol) ? d : (m > 0.0 ? tol : -tol);
        fb = f(b);
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    throw convergence_error("find_root: iteration limit", b, fb);
}

namespace {
std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace

SplitMix64::SplitMix64(std::uint64_t seed, std::uint64_t stream)
    : state(mix64(seed ^ 0x6a09e667f3bcc909ULL) +
            mix64(stream) * 0x9e3779b97f4a7c15ULL) {}

std::uint64_t SplitMix64::next() {
    state += 0x9e3779b97f4a7c15ULL;
    return mix64(state);
}

double SplitMix64::uniform() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double SplitMix64::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

}  // namespace pdqkd
