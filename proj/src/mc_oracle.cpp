#include "pdqkd/mc_oracle.hpp"

#include "pdqkd/active_baselines.hpp"
#include "pdqkd/fluctuation.hpp"
#include "pdqkd/numerics.hpp"
#include "pdqkd/passive_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace pdqkd {

namespace {

using Rng = SplitMix64;

int poisson_knuth(Rng& rng, double mean) {
    if (!(mean > 0.0)) return 0;
    const double limit = std::exp(-mean);
    int k = 0;
    double p = 1.0;
    do {
        ++k;
        p *= rng.uniform();
    } while (p > limit);
    return k - 1;
}

double binom_se(double p, double n) {
    return n > 0.0 ? std::sqrt(std::max(p * (1.0 - p), 0.0) / n)
                   : std::numeric_limits<double>::infinity();
}

struct TrialModel {
    DerivedSourceParams dp;
    double eps, eta_d;
    double eta;
    std::vector<double> yield, err, no_click_pow;  // indexed by photon count

    TrialModel(const SourceParams& src, const ChannelParams& ch)
        : dp(derive(src)), eps(src.eps_dark), eta_d(src.eta_d) {
        eta = eta_sys(ch);
        const int cap = 128;
        yield.resize(cap + 1);
        err.resize(cap + 1);
        no_click_pow.resize(cap + 1);
        for (int n = 0; n <= cap; ++n) {
            yield[n] = yield_n(n, ch.Y0, eta);
            err[n] = yield[n] > 0.0
                         ? (ch.e0 * ch.Y0 + ch.e_d * (yield[n] - ch.Y0)) /
                               yield[n]
                         : 0.0;
            no_click_pow[n] = std::pow(1.0 - eta_d, n);
        }
    }
    double yield_at(int n) const {
        return n < static_cast<int>(yield.size()) ? yield[n] : yield.back();
    }
    double err_at(int n) const {
        return n < static_cast<int>(err.size()) ? err[n] : err.back();
    }
    double survive_pow(int m) const {
        return m < static_cast<int>(no_click_pow.size())
                   ? no_click_pow[m]
                   : std::pow(1.0 - eta_d, m);
    }
};

void run_range(const TrialModel& model, std::uint64_t seed, std::uint64_t lo,
               std::uint64_t hi, McTally& out) {
    McTally t;
    for (std::uint64_t i = lo; i < hi; ++i) {
        Rng rng(seed, i);
        const double theta = 2.0 * M_PI * rng.uniform();
        const double g = gamma_fraction(model.dp, theta);
        const int n_a = poisson_knuth(rng, model.dp.nu * g);
        const int m_b = poisson_knuth(rng, model.dp.nu * (1.0 - g));

        const double p_click = 1.0 - (1.0 - model.eps) * model.survive_pow(m_b);
        const bool click = rng.uniform() < p_click;
        const bool detect = rng.uniform() < model.yield_at(n_a);
        const bool error = detect && rng.uniform() < model.err_at(n_a);

        ++t.trials;
        t.sum_na += static_cast<std::uint64_t>(n_a);
        t.sum_na_sq += static_cast<std::uint64_t>(n_a) *
                       static_cast<std::uint64_t>(n_a);
        const int slot = std::min(n_a, kMcTrackedN + 1);
        if (click) {
            ++t.clicks;
            ++t.n_click[slot];
            if (detect) ++t.detect_click;
            if (error) ++t.error_click;
        } else {
            ++t.n_noclick[slot];
            if (detect) ++t.detect_noclick;
            if (error) ++t.error_noclick;
        }
    }
    out = t;
}

}  // namespace

void McTally::merge(const McTally& o) {
    trials += o.trials;
    clicks += o.clicks;
    detect_click += o.detect_click;
    detect_noclick += o.detect_noclick;
    error_click += o.error_click;
    error_noclick += o.error_noclick;
    for (std::size_t i = 0; i < n_click.size(); ++i) {
        n_click[i] += o.n_click[i];
        n_noclick[i] += o.n_noclick[i];
    }
    sum_na += o.sum_na;
    sum_na_sq += o.sum_na_sq;
}

McReport run_trials(const SourceParams& source, const ChannelParams& channel,
                    std::uint64_t trials, std::uint64_t seed, int jobs) {
    source.validate();
    channel.validate();
    if (trials < 1) throw domain_error("run_trials: trials < 1");
    if (jobs < 1) throw domain_error("run_trials: jobs < 1");
    jobs = static_cast<int>(
        std::min<std::uint64_t>(static_cast<std::uint64_t>(jobs), trials));

    const TrialModel model(source, channel);
    std::vector<McTally> parts(jobs);
    if (jobs == 1) {
        run_range(model, seed, 0, trials, parts[0]);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (int w = 0; w < jobs; ++w) {
            const std::uint64_t lo = trials * w / jobs;
            const std::uint64_t hi = trials * (w + 1) / jobs;
            pool.emplace_back(run_range, std::cref(model), seed, lo, hi,
                              std::ref(parts[w]));
        }
        for (auto& th : pool) th.join();
    }

    McReport r;
    r.trials = trials;
    r.seed = seed;
    for (const auto& p : parts) r.tally.merge(p);
    const auto& t = r.tally;
    const double N = static_cast<double>(trials);

    r.Q_t = static_cast<double>(t.detect_click + t.detect_noclick) / N;
    r.Q_c = static_cast<double>(t.detect_click) / N;
    r.Q_nc = static_cast<double>(t.detect_noclick) / N;
    r.Q_t_se = binom_se(r.Q_t, N);
    r.Q_c_se = binom_se(r.Q_c, N);
    r.Q_nc_se = binom_se(r.Q_nc, N);

    auto qber = [](std::uint64_t err, std::uint64_t det, double& E,
                   double& se) {
        if (det == 0) {
            E = 0.0;
            se = std::numeric_limits<double>::infinity();
            return;
        }
        E = static_cast<double>(err) / static_cast<double>(det);
        se = binom_se(E, static_cast<double>(det));
    };
    qber(t.error_click + t.error_noclick, t.detect_click + t.detect_noclick,
         r.E_t, r.E_t_se);
    qber(t.error_click, t.detect_click, r.E_c, r.E_c_se);
    qber(t.error_noclick, t.detect_noclick, r.E_nc, r.E_nc_se);

    for (std::size_t i = 0; i < t.n_click.size(); ++i) {
        r.freq_click[i] = static_cast<double>(t.n_click[i]) / N;
        r.freq_click_se[i] = binom_se(r.freq_click[i], N);
        r.freq_noclick[i] = static_cast<double>(t.n_noclick[i]) / N;
        r.freq_noclick_se[i] = binom_se(r.freq_noclick[i], N);
    }

    r.mean_na = static_cast<double>(t.sum_na) / N;
    const double m2 = static_cast<double>(t.sum_na_sq) / N;
    r.mean_na_se = std::sqrt(std::max(m2 - r.mean_na * r.mean_na, 0.0) / N);
    return r;
}

namespace {

struct BatteryRecorder {
    BatteryReport& report;
    int instance;
    // "bound must stay at or below truth" with relative cushion
    void below(const char* name, double bound, double truth, double cushion) {
        ++report.checks;
        if (bound > truth * (1.0 + cushion) + 1e-300) record(name, bound, truth);
    }
    void above(const char* name, double bound, double truth, double cushion) {
        ++report.checks;
        if (bound < truth * (1.0 - cushion) - 1e-300) record(name, bound, truth);
    }
    void record(const char* name, double bound, double truth) {
        ++report.violation_count;
        if (report.violations.size() < 20)
            report.violations.push_back({instance, name, bound, truth});
    }
};

}  // namespace

BatteryReport soundness_battery(const BatterySpec& spec) {
    if (spec.instances < 1) throw domain_error("soundness_battery: instances < 1");
    if (!(spec.delta >= 0.0 && spec.delta < 0.5))
        throw domain_error("soundness_battery: delta outside [0, 0.5)");

    BatteryReport report;
    report.instances = spec.instances;
    const double cu = spec.cushion;

    for (int inst = 0; inst < spec.instances; ++inst) {
        Rng rng(spec.seed, 0x5000 + static_cast<std::uint64_t>(inst));
        auto jitter = [&](double v) { return v * (1.0 + 0.1 * rng.uniform(-1.0, 1.0)); };

        ChannelParams ch;
        ch.alpha = jitter(0.21);
        ch.distance = rng.uniform(5.0, 100.0);
        ch.eta_bob = jitter(0.045);
        ch.Y0 = jitter(1.7e-6);
        ch.e_d = jitter(0.033);

        SourceParams declared;
        declared.mu1 = jitter(0.5);
        declared.mu2 = jitter(1e-4);
        declared.t = jitter(0.5);
        declared.eta_d = jitter(0.12);
        declared.eps_dark = jitter(3.2e-7);

        SourceParams truth = declared;
        if (spec.negative_control) {
            truth.mu1 = declared.mu1 * (1.0 + spec.delta) * 1.25;
            truth.mu2 = declared.mu2 * (1.0 + spec.delta) * 1.5;
        } else {
            truth.mu1 = declared.mu1 * (1.0 + spec.delta * rng.uniform(-1.0, 1.0));
            truth.mu2 = declared.mu2 * (1.0 + spec.delta * rng.uniform(-1.0, 1.0));
        }

        const PhotonNumberStats ts = build_stats(truth);
        const Observables obs = observables(ts, ch);
        const double eta = eta_sys(ch);
        const double Y1_true = yield_n(1, ch.Y0, eta);
        const double e1_true = true_e_n(1, ch, eta);
        const double D1c_true = ts.p_click[1] * Y1_true / obs.Q_c;
        const double D0c_true = ch.Y0 * ts.p_click[0] / obs.Q_c;
        const double D1nc_true = ts.p_noclick[1] * Y1_true / obs.Q_nc;
        const double D0nc_true = ch.Y0 * ts.p_noclick[0] / obs.Q_nc;

        BatteryRecorder rec{report, inst};

        // Passive estimator fed the true statistics must bracket the truth.
        const double Y1L = y1_lower(ts, obs, ch.Y0);
        rec.below("passive.Y1_L", Y1L, Y1_true, cu);
        if (Y1L > 0.0)
            rec.above("passive.e1_U", e1_upper(ts, obs, ch.Y0, Y1L), e1_true, cu);

        // Fluctuation estimator: declared box, observation taken at the truth.
        FluctuationSpec fs;
        fs.delta_mu1 = spec.delta;
        fs.delta_mu2 = spec.delta;
        const PhotonNumberStats nominal = build_stats(declared);
        const ProbabilityIntervals iv = consistent_intervals(
            declared, fs, nominal.n_cut, ts.P_noclick);
        if (iv.empty()) {
            // The declared box cannot reproduce the observation. For an
            // honest instance this is an estimator failure; for the negative
            // control it is the detection we are testing for.
            rec.record("fluct.observation_consistent", 0.0, 1.0);
            ++report.checks;
        } else {
            const QRatios q = q_ratios(iv);
            const DeltaBoundsClick db = delta_bounds_click(obs, iv, q, ch.Y0);
            rec.below("fluct.Y1_worst", db.Y1_worst, Y1_true, cu);
            rec.below("fluct.Delta1c_L", db.Delta1c_L, D1c_true, cu);
            rec.below("fluct.Delta0c_L", db.Delta0c_L, D0c_true, cu);
            if (db.Delta1c_L > 0.0) {
                double e1 = e1_click_upper(obs, db.Delta1c_L, db.Delta0c_L);
                if (db.Y1_worst > 0.0) {
                    double c2 = -1.0, c3 = -1.0;
                    bool any3 = false;
                    for (const auto& node : iv.consistent_nodes) {
                        const E1Candidates c =
                            e1_candidates(node, obs, ch.Y0, db.Y1_worst);
                        c2 = std::max(c2, c.c2);
                        if (std::isfinite(c.c3)) {
                            c3 = std::max(c3, c.c3);
                            any3 = true;
                        }
                    }
                    e1 = std::min(e1, c2);
                    if (any3) e1 = std::min(e1, c3);
                }
                rec.above("fluct.e1c_U", std::clamp(e1, 0.0, 1.0), e1_true, cu);

                const TransferBounds tb = transfer_to_noclick(
                    obs, iv, db.Delta1c_L, db.Delta0c_L, ch.Y0);
                rec.below("fluct.Y1c_L", tb.Y1c_L, Y1_true, cu);
                rec.below("fluct.Delta1nc_L", tb.Delta1nc_L, D1nc_true, cu);
                rec.below("fluct.Delta0nc_L", tb.Delta0nc_L, D0nc_true, cu);
            }
        }

        // Active baselines: observation at the true intensities, corner scan
        // over the declared box.
        ActiveDecoyParams ap;
        ap.delta = spec.delta;
        double mu_t, nu_t;
        if (spec.negative_control) {
            mu_t = ap.mu_signal * (1.0 + spec.delta) * 1.25;
            nu_t = ap.nu_decoy * (1.0 + spec.delta) * 1.5;
        } else {
            mu_t = ap.mu_signal * (1.0 + spec.delta * rng.uniform(-1.0, 1.0));
            nu_t = ap.nu_decoy * (1.0 + spec.delta * rng.uniform(-1.0, 1.0));
        }
        ActiveObservation aobs;
        aobs.Q_mu = 1.0 - (1.0 - ch.Y0) * std::exp(-eta * mu_t);
        aobs.E_mu = (ch.e_d * aobs.Q_mu + (ch.e0 - ch.e_d) * ch.Y0) / aobs.Q_mu;
        aobs.Q_nu = 1.0 - (1.0 - ch.Y0) * std::exp(-eta * nu_t);
        aobs.E_nu = (ch.e_d * aobs.Q_nu + (ch.e0 - ch.e_d) * ch.Y0) / aobs.Q_nu;

        const std::vector<double> mus =
            spec.delta == 0.0
                ? std::vector<double>{ap.mu_signal}
                : std::vector<double>{ap.mu_signal * (1.0 - spec.delta),
                                      ap.mu_signal * (1.0 + spec.delta)};
        const std::vector<double> nus =
            spec.delta == 0.0
                ? std::vector<double>{ap.nu_decoy}
                : std::vector<double>{ap.nu_decoy * (1.0 - spec.delta),
                                      ap.nu_decoy * (1.0 + spec.delta)};
        for (bool vacuum : {true, false}) {
            double Y1a = std::numeric_limits<double>::infinity();
            double e1a = 0.0, Y0U = std::numeric_limits<double>::infinity();
            bool vac = false;
            for (double m : mus)
                for (double n : nus) {
                    const ActiveBounds b =
                        active_bounds(m, n, aobs, ch.Y0, vacuum, ch.e0);
                    vac = vac || b.vacuous;
                    Y1a = std::min(Y1a, b.Y1_L);
                    e1a = std::max(e1a, b.e1_U);
                    Y0U = std::min(Y0U, b.Y0_U);
                }
            if (!vac) {
                rec.below(vacuum ? "active3.Y1_L" : "active2.Y1_L", Y1a,
                          Y1_true, cu);
                rec.above(vacuum ? "active3.e1_U" : "active2.e1_U", e1a,
                          e1_true, cu);
            }
            if (!vacuum) rec.above("active2.Y0_U", Y0U, ch.Y0, cu);
        }
    }
    return report;
}

}  // namespace pdqkd
