// Acceptance gate: each numbered criterion prints one PASS/FAIL line with
// the measured quantities behind the verdict. Run as `acceptance <n>` for a
// single criterion or with no argument for the full battery.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <sstream>
#include <string>
#include <vector>

#include "pdqkd/active_baselines.hpp"
#include "pdqkd/config.hpp"
#include "pdqkd/fluctuation.hpp"
#include "pdqkd/mc_oracle.hpp"
#include "pdqkd/runner.hpp"

using namespace pdqkd;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void verdict(int n, bool ok, const std::string& detail) {
    std::printf("CRITERION %d: %s - %s\n", n, ok ? "PASS" : "FAIL",
                detail.c_str());
}

constexpr std::uint64_t kSeed = 20240815;

bool criterion_1() {
    const auto t0 = Clock::now();
    const ConsistencyReport rep = consistency_grid(100, kSeed);
    const double secs = seconds_since(t0);
    const bool ok = rep.failures == 0 && secs < 60.0;
    std::ostringstream d;
    d << rep.points - rep.failures << "/" << rep.points
      << " random sources consistent in " << secs << " s";
    if (rep.failures > 0) d << "; first failure: " << rep.first_failure;
    verdict(1, ok, d.str());
    return ok;
}

bool criterion_2() {
    const auto t0 = Clock::now();
    const SourceParams src{};
    const PhotonNumberStats st = build_stats(src, 1e-9);
    int gates = 0, misses = 0;
    double worst_z = 0.0;
    for (double dist : {0.0, 30.0, 50.0}) {
        ChannelParams ch;
        ch.distance = dist;
        const Observables o = observables(st, ch);
        const std::uint64_t N = 10000000;
        const McReport r = run_trials(src, ch, N, kSeed, 4);
        auto gate = [&](double emp, double p, double se) {
            const double z = se > 0.0 ? std::fabs(emp - p) / se : 0.0;
            worst_z = std::max(worst_z, z);
            ++gates;
            if (z > 4.0) ++misses;
        };
        auto binom = [&](double p) {
            return std::sqrt(p * (1.0 - p) / static_cast<double>(N));
        };
        gate(r.Q_t, o.Q_t, binom(o.Q_t));
        gate(r.Q_c, o.Q_c, binom(o.Q_c));
        gate(r.Q_nc, o.Q_nc, binom(o.Q_nc));
        const double det = o.Q_t * static_cast<double>(N);
        gate(r.E_t, o.E_t, std::sqrt(o.E_t * (1.0 - o.E_t) / det));
        for (int n = 0; n <= 5; ++n)
            gate(r.freq_noclick[n], st.p_noclick[n], binom(st.p_noclick[n]));
    }
    const double secs = seconds_since(t0);
    const bool ok = misses == 0 && secs < 120.0;
    std::ostringstream d;
    d << gates << " four-sigma gates at 1e7 trials, worst |z| = " << worst_z
      << ", " << misses << " misses, " << secs << " s";
    verdict(2, ok, d.str());
    return ok;
}

bool criterion_3() {
    const FluctuationContext ctx = make_fluctuation_context({}, {});
    ProtocolParams proto;
    double worst = 0.0;
    int worst_d = 0;
    for (int d = 1; d <= 150; ++d) {
        ChannelParams ch;
        ch.distance = d;
        const double rf = fluctuation_pipeline(ctx, ch, proto).R;
        const double rp = passive_pipeline(ctx.nominal, ch, proto).R;
        const double denom = std::max(std::fabs(rp), 1e-300);
        const double rel = std::fabs(rf - rp) / denom;
        if (rel > worst) worst = rel, worst_d = d;
    }
    const bool ok = worst <= 1e-10;
    std::ostringstream d;
    d << "max |R_fluct - R_passive| / R = " << worst;
    if (worst > 0.0) d << " at d = " << worst_d << " km";
    d << " over 1..150 km";
    verdict(3, ok, d.str());
    return ok;
}

bool criterion_4() {
    long checks = 0, violations = 0;
    bool ok = true;
    for (double delta : {0.0, 0.02, 0.05, 0.10}) {
        BatterySpec spec;
        spec.instances = 100;
        spec.seed = kSeed;
        spec.delta = delta;
        const BatteryReport rep = soundness_battery(spec);
        checks += rep.checks;
        violations += rep.violation_count;
        ok = ok && rep.passed();
    }
    BatterySpec neg;
    neg.instances = 100;
    neg.seed = kSeed;
    neg.delta = 0.05;
    neg.negative_control = true;
    const BatteryReport caught = soundness_battery(neg);
    ok = ok && caught.violation_count > 0;
    std::ostringstream d;
    d << checks << " honest bound checks, " << violations
      << " violations; negative control reported "
      << caught.violation_count << " planted violations";
    verdict(4, ok, d.str());
    return ok;
}

bool criterion_5() {
    ProtocolParams proto;
    std::vector<double> f30, f50;
    for (int k = 0; k <= 10; ++k) {
        const double delta = 0.01 * k;
        FluctuationSpec spec;
        spec.delta_mu1 = spec.delta_mu2 = delta;
        const FluctuationContext ctx = make_fluctuation_context({}, spec);
        for (double dist : {30.0, 50.0}) {
            ChannelParams ch;
            ch.distance = dist;
            const double r = fluctuation_pipeline(ctx, ch, proto).R;
            (dist == 30.0 ? f30 : f50).push_back(r);
        }
    }
    for (int k = 10; k >= 0; --k) {
        f30[k] /= f30[0];
        f50[k] /= f50[0];
    }
    bool mono = true, ordered = true;
    for (int k = 1; k <= 10; ++k) {
        mono = mono && f30[k] <= f30[k - 1] + 1e-12 &&
               f50[k] <= f50[k - 1] + 1e-12;
        ordered = ordered && f30[k] > f50[k];
    }
    const bool tail_small = f50[10] < 0.2;
    const bool ok = mono && ordered && tail_small;
    std::ostringstream d;
    d << "fidelity nonincreasing: " << (mono ? "yes" : "NO")
      << "; F(30,delta) > F(50,delta) for delta > 0: "
      << (ordered ? "yes" : "NO") << "; F(50, 0.10) = " << f50[10]
      << (tail_small ? " < 0.2" : " (needs < 0.2)");
    verdict(5, ok, d.str());
    return ok;
}

struct MethodRates {
    std::vector<double> base, fluct;  // index 0 unused; 1..max km
};

bool criterion_6() {
    ProtocolParams proto;
    const int dmax = 150, scan = 250;
    bool pass_vs_2 = true, cutoff_ok = true;
    int gap_hits = 0;
    double worst_gap = 0.0;
    int worst_gap_d = 0;
    double worst_gap_delta = 0.0;

    const FluctuationContext ctx0 = make_fluctuation_context({}, {});
    for (double delta : {0.02, 0.05}) {
        FluctuationSpec spec;
        spec.delta_mu1 = spec.delta_mu2 = delta;
        const FluctuationContext ctx = make_fluctuation_context({}, spec);
        ActiveDecoyParams a2, a3, a2f, a3f;
        a2.include_vacuum = false;
        a3.include_vacuum = true;
        a2f = a2, a3f = a3;
        a2f.delta = a3f.delta = delta;

        int cut_p = 0, cut_3 = 0;
        for (int d = 1; d <= scan; ++d) {
            ChannelParams ch;
            ch.distance = d;
            if (fluctuation_pipeline(ctx, ch, proto).R > 0.0) cut_p = d;
            if (active_rate(a3f, ch, proto).R > 0.0) cut_3 = d;
        }
        cutoff_ok = cutoff_ok && cut_p <= cut_3;

        for (int d = 1; d <= dmax; ++d) {
            ChannelParams ch;
            ch.distance = d;
            const double rp = fluctuation_pipeline(ctx, ch, proto).R;
            const double rp0 = passive_pipeline(ctx0.nominal, ch, proto).R;
            const double r2 = active_rate(a2f, ch, proto).R;
            const double r20 = active_rate(a2, ch, proto).R;
            const double r3 = active_rate(a3f, ch, proto).R;
            const double r30 = active_rate(a3, ch, proto).R;
            if (rp > 0.0 && r2 > 0.0)
                pass_vs_2 = pass_vs_2 && rp / rp0 >= r2 / r20 - 1e-12;
            if (rp > 0.0 && r3 > 0.0) {
                const double gap = std::fabs(rp / rp0 - r3 / r30);
                if (gap > 0.1) {
                    ++gap_hits;
                    if (gap > worst_gap)
                        worst_gap = gap, worst_gap_d = d, worst_gap_delta = delta;
                }
            }
        }
    }
    const bool ok = pass_vs_2 && gap_hits == 0 && cutoff_ok;
    std::ostringstream d;
    d << "passive >= 2-intensity fidelity: " << (pass_vs_2 ? "yes" : "NO")
      << "; passive cutoff <= 3-intensity cutoff: "
      << (cutoff_ok ? "yes" : "NO") << "; |F_p - F_3| <= 0.1: ";
    if (gap_hits == 0)
        d << "yes";
    else
        d << gap_hits << " distances exceed it, worst " << worst_gap
          << " at d = " << worst_gap_d << " km, delta = " << worst_gap_delta;
    verdict(6, ok, d.str());
    return ok;
}

bool criterion_7() {
    ProtocolParams proto;
    std::vector<int> cutoffs;
    bool mono = true, alive_at_10 = false;
    for (double delta : {0.0, 0.02, 0.05, 0.10}) {
        FluctuationSpec spec;
        spec.delta_mu1 = spec.delta_mu2 = delta;
        const FluctuationContext ctx = make_fluctuation_context({}, spec);
        int cut = 0;
        double prev = 1.0;
        for (int d = 1; d <= 250; ++d) {
            ChannelParams ch;
            ch.distance = d;
            const double r = fluctuation_pipeline(ctx, ch, proto).R;
            if (delta == 0.0) {
                if (d == 10) alive_at_10 = r > 0.0;
                if (r > prev + 1e-15) mono = false;
                prev = r;
            }
            if (r > 0.0) cut = d;
        }
        cutoffs.push_back(cut);
    }
    bool shrinking = true;
    for (std::size_t i = 1; i < cutoffs.size(); ++i)
        shrinking = shrinking && cutoffs[i] < cutoffs[i - 1];
    const bool finite = cutoffs[0] > 0 && cutoffs[0] < 250;
    const bool ok = alive_at_10 && mono && finite && shrinking;
    std::ostringstream d;
    d << "R(10 km) > 0: " << (alive_at_10 ? "yes" : "NO")
      << "; monotone nonincreasing: " << (mono ? "yes" : "NO")
      << "; cutoffs at delta {0, 0.02, 0.05, 0.10} = {" << cutoffs[0] << ", "
      << cutoffs[1] << ", " << cutoffs[2] << ", " << cutoffs[3] << "} km";
    verdict(7, ok, d.str());
    return ok;
}

bool criterion_8() {
    RunConfig cfg;
    std::ostringstream out, diag;
    const auto t0 = Clock::now();
    const int code = cmd_compare(cfg, out, diag);
    const double secs = seconds_since(t0);
    const bool ok = code == 0 && secs < 10.0;
    std::ostringstream d;
    d << "compare (3 methods x 2 deltas x " << cfg.compare_distance_max
      << " distances) in " << secs << " s, exit " << code;
    verdict(8, ok, d.str());
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    bool (*criteria[])() = {criterion_1, criterion_2, criterion_3,
                            criterion_4, criterion_5, criterion_6,
                            criterion_7, criterion_8};
    if (argc > 1) {
        const int n = std::atoi(argv[1]);
        if (n < 1 || n > 8) {
            std::fprintf(stderr, "usage: acceptance [1-8]\n");
            return 2;
        }
        return criteria[n - 1]() ? 0 : 1;
    }
    bool all = true;
    for (auto* c : criteria) all = c() && all;
    return all ? 0 : 1;
}
