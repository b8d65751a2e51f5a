#include "pdqkd/source_stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pdqkd {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559005768;

double log_poisson_prefactor(int n, double nu) {
    // nu^n / n!, log-space beyond n = 20 to dodge overflow in n!.
    if (n <= 20) {
        double pref = 1.0;
        for (int k = 1; k <= n; ++k) pref *= nu / k;
        return pref;
    }
    return std::exp(n * std::log(nu) - std::lgamma(n + 1.0));
}

// Means over theta of gamma^n e^{-nu gamma} (total) and
// gamma^n e^{-(1-eta_d) nu gamma} (no click), all n in one sweep so a
// lattice of fluctuation points stays cheap. Same doubling scheme as
// periodic_quadrature; converged when every entry is stable.
struct ThetaMeans {
    std::vector<double> total, noclick;
};

ThetaMeans theta_means(const DerivedSourceParams& d, double eta_d, int nmax,
                       const QuadratureSpec& spec) {
    if (spec.node_count < 16)
        throw domain_error("theta_means: node_count < 16");
    const double kt = d.nu;
    const double kn = (1.0 - eta_d) * d.nu;

    auto accumulate = [&](int count, double offset, std::vector<double>& at,
                          std::vector<double>& an) {
        for (int j = 0; j < count; ++j) {
            const double g = gamma_fraction(d, kTwoPi * (j + offset) / count);
            const double et = std::exp(-kt * g);
            const double en = std::exp(-kn * g);
            double gp = 1.0;
            for (int n = 0; n <= nmax; ++n) {
                at[n] += gp * et;
                an[n] += gp * en;
                gp *= g;
            }
        }
        for (int n = 0; n <= nmax; ++n) {
            at[n] /= count;
            an[n] /= count;
        }
    };

    int count = spec.node_count;
    ThetaMeans cur;
    cur.total.assign(nmax + 1, 0.0);
    cur.noclick.assign(nmax + 1, 0.0);
    accumulate(count, 0.0, cur.total, cur.noclick);

    for (int r = 0; r <= spec.refinement_limit; ++r) {
        ThetaMeans mid;
        mid.total.assign(nmax + 1, 0.0);
        mid.noclick.assign(nmax + 1, 0.0);
        accumulate(count, 0.5, mid.total, mid.noclick);
        bool ok = true;
        for (int n = 0; n <= nmax; ++n) {
            mid.total[n] = 0.5 * (cur.total[n] + mid.total[n]);
            mid.noclick[n] = 0.5 * (cur.noclick[n] + mid.noclick[n]);
            const double st =
                std::max(std::fabs(mid.total[n]), std::fabs(cur.total[n]));
            const double sn =
                std::max(std::fabs(mid.noclick[n]), std::fabs(cur.noclick[n]));
            // entries below ~1e-300 are pure underflow noise; skip them
            if (st > 1e-300 && std::fabs(mid.total[n] - cur.total[n]) >
                                   spec.relative_tolerance * st)
                ok = false;
            if (sn > 1e-300 && std::fabs(mid.noclick[n] - cur.noclick[n]) >
                                   spec.relative_tolerance * sn)
                ok = false;
        }
        cur = std::move(mid);
        if (ok) return cur;
        count *= 2;
    }
    throw convergence_error("theta_means: refinement limit reached",
                            cur.total[0], cur.noclick[0]);
}

double clamp_click_difference(double diff) {
    if (diff < 0.0) {
        if (diff > -1e-14) return 0.0;
        throw consistency_error(
            "p_click: total below no-click beyond rounding tolerance");
    }
    return diff;
}

}  // namespace

void SourceParams::validate() const {
    if (!(mu1 >= 0.0) || !(mu2 >= 0.0) || (mu1 == 0.0 && mu2 == 0.0))
        throw domain_error("SourceParams: intensities must be >= 0, not both 0");
    if (!(t >= 0.0 && t <= 1.0))
        throw domain_error("SourceParams: t outside [0,1]");
    if (!(eta_d >= 0.0 && eta_d <= 1.0))
        throw domain_error("SourceParams: eta_d outside [0,1]");
    if (!(eps_dark >= 0.0 && eps_dark < 1.0))
        throw domain_error("SourceParams: eps_dark outside [0,1)");
}

DerivedSourceParams derive(const SourceParams& p) {
    p.validate();
    DerivedSourceParams d;
    d.nu = p.mu1 + p.mu2;
    d.xi = 2.0 * std::sqrt(p.mu1 * p.mu2 * (1.0 - p.t) * p.t);
    d.w_a = p.mu1 * p.t + p.mu2 * (1.0 - p.t);
    d.w_b = p.mu1 * (1.0 - p.t) + p.mu2 * p.t;
    return d;
}

double gamma_fraction(const DerivedSourceParams& d, double theta) {
    return (d.w_a + d.xi * std::cos(theta)) / d.nu;
}

double p_total(int n, const SourceParams& p, const QuadratureSpec& quad) {
    if (n < 0) throw domain_error("p_total: negative n");
    const DerivedSourceParams d = derive(p);
    const double mean = periodic_quadrature(
        [&](double th) {
            const double g = gamma_fraction(d, th);
            return std::pow(g, n) * std::exp(-d.nu * g);
        },
        quad);
    return log_poisson_prefactor(n, d.nu) * mean;
}

double p_noclick(int n, const SourceParams& p, const QuadratureSpec& quad) {
    if (n < 0) throw domain_error("p_noclick: negative n");
    const DerivedSourceParams d = derive(p);
    const double k = (1.0 - p.eta_d) * d.nu;
    const double mean = periodic_quadrature(
        [&](double th) {
            const double g = gamma_fraction(d, th);
            return std::pow(g, n) * std::exp(-k * g);
        },
        quad);
    return (1.0 - p.eps_dark) * std::exp(-p.eta_d * d.nu) *
           log_poisson_prefactor(n, d.nu) * mean;
}

double p_click(int n, const SourceParams& p, const QuadratureSpec& quad) {
    return clamp_click_difference(p_total(n, p, quad) - p_noclick(n, p, quad));
}

double joint_prob(int n, int m, const SourceParams& p,
                  const QuadratureSpec& quad) {
    if (n < 0 || m < 0) throw domain_error("joint_prob: negative count");
    const DerivedSourceParams d = derive(p);
    const double mean = periodic_quadrature(
        [&](double th) {
            const double g = gamma_fraction(d, th);
            return std::pow(g, n) * std::pow(1.0 - g, m);
        },
        quad);
    const double lpref = (n + m) * std::log(d.nu) - d.nu -
                         std::lgamma(n + 1.0) - std::lgamma(m + 1.0);
    return std::exp(lpref) * mean;
}

double noclick_aggregate(const SourceParams& p) {
    const DerivedSourceParams d = derive(p);
    return (1.0 - p.eps_dark) * std::exp(-p.eta_d * d.w_b) *
           bessel_i0(p.eta_d * d.xi);
}

namespace {

PhotonNumberStats assemble_stats(const SourceParams& p, int nmax,
                                 const QuadratureSpec& quad) {
    PhotonNumberStats st;
    st.params = p;
    st.derived = derive(p);
    const ThetaMeans means = theta_means(st.derived, p.eta_d, nmax, quad);

    const double nc_pref =
        (1.0 - p.eps_dark) * std::exp(-p.eta_d * st.derived.nu);
    st.p_total.resize(nmax + 1);
    st.p_noclick.resize(nmax + 1);
    double pref = 1.0;
    for (int n = 0; n <= nmax; ++n) {
        st.p_total[n] = pref * means.total[n];
        st.p_noclick[n] = nc_pref * pref * means.noclick[n];
        pref *= st.derived.nu / (n + 1);
    }
    st.n_cut = nmax;
    return st;
}

void finish_stats(PhotonNumberStats& st) {
    st.p_click.resize(st.n_cut + 1);
    for (int n = 0; n <= st.n_cut; ++n)
        st.p_click[n] =
            clamp_click_difference(st.p_total[n] - st.p_noclick[n]);
    st.tail_total = std::max(
        1.0 - std::accumulate(st.p_total.begin(), st.p_total.end(), 0.0), 0.0);
    st.P_noclick = noclick_aggregate(st.params);
    st.P_click = 1.0 - st.P_noclick;
}

}  // namespace

PhotonNumberStats build_stats(const SourceParams& p, double tail_mass,
                              int hard_cap, const QuadratureSpec& quad) {
    if (!(tail_mass > 0.0 && tail_mass <= 1e-6))
        throw domain_error("build_stats: tail_mass outside (0, 1e-6]");
    if (hard_cap < 1 || hard_cap > 256)
        throw domain_error("build_stats: unreasonable hard_cap");

    PhotonNumberStats st = assemble_stats(p, hard_cap, quad);
    double cum = 0.0;
    int n_cut = -1;
    for (int n = 0; n <= hard_cap && n_cut < 0; ++n) {
        cum += st.p_total[n];
        if (1.0 - cum <= tail_mass) n_cut = n;
    }
    if (n_cut < 0)
        throw truncation_error("build_stats: tail mass not reached by hard cap");
    st.n_cut = n_cut;
    st.p_total.resize(n_cut + 1);
    st.p_noclick.resize(n_cut + 1);
    finish_stats(st);
    return st;
}

PhotonNumberStats build_stats_fixed(const SourceParams& p, int n_cut,
                                    const QuadratureSpec& quad) {
    if (n_cut < 2 || n_cut > 256)
        throw domain_error("build_stats_fixed: n_cut outside [2,256]");
    PhotonNumberStats st = assemble_stats(p, n_cut, quad);
    finish_stats(st);
    return st;
}

}  // namespace pdqkd
