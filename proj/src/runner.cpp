#include "pdqkd/runner.hpp"

#include "pdqkd/active_baselines.hpp"
#include "pdqkd/fluctuation.hpp"
#include "pdqkd/mc_oracle.hpp"
#include "pdqkd/numerics.hpp"
#include "pdqkd/passive_estimator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>
#include <vector>

namespace pdqkd {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string join_flags(const std::vector<std::string>& flags) {
    std::string s;
    for (std::size_t i = 0; i < flags.size(); ++i) {
        if (i) s += ';';
        s += flags[i];
    }
    return s;
}

std::string cell(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

std::string json_cell(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("null");
}

struct SweepRow {
    double axis = 0.0;
    std::optional<double> R_c, R_nc, R, fidelity, Y1_L, e1_U, Delta1c_L;
    std::optional<double> Q_t, Q_c, Q_nc, E_t, E_c, E_nc;
    std::vector<std::string> flags;
};

constexpr const char* kSweepHeader =
    "axis,R_c,R_nc,R,fidelity,Y1_L,e1_U,Delta1c_L,Q_t,Q_c,Q_nc,E_t,E_c,E_nc,"
    "flags";

void write_sweep_rows(std::ostream& out, OutputFormat fmt,
                      const std::vector<SweepRow>& rows) {
    const std::pair<const char*, std::optional<double> SweepRow::*> cols[] = {
        {"R_c", &SweepRow::R_c},           {"R_nc", &SweepRow::R_nc},
        {"R", &SweepRow::R},               {"fidelity", &SweepRow::fidelity},
        {"Y1_L", &SweepRow::Y1_L},         {"e1_U", &SweepRow::e1_U},
        {"Delta1c_L", &SweepRow::Delta1c_L}, {"Q_t", &SweepRow::Q_t},
        {"Q_c", &SweepRow::Q_c},           {"Q_nc", &SweepRow::Q_nc},
        {"E_t", &SweepRow::E_t},           {"E_c", &SweepRow::E_c},
        {"E_nc", &SweepRow::E_nc},
    };
    if (fmt == OutputFormat::csv) {
        out << kSweepHeader << '\n';
        for (const auto& r : rows) {
            out << format_double(r.axis);
            for (const auto& c : cols) out << ',' << cell(r.*(c.second));
            out << ',' << join_flags(r.flags) << '\n';
        }
    } else {
        for (const auto& r : rows) {
            out << "{\"axis\":" << format_double(r.axis);
            for (const auto& c : cols)
                out << ",\"" << c.first << "\":" << json_cell(r.*(c.second));
            out << ",\"flags\":\"" << join_flags(r.flags) << "\"}\n";
        }
    }
}

// Contexts are distance-independent, so one per delta pair serves a whole
// sweep. Build serially (the map is not synchronized), read from workers.
struct ContextCache {
    const RunConfig& cfg;
    std::map<std::pair<double, double>, FluctuationContext> store{};
    const FluctuationContext& get(double d1, double d2) {
        const auto key = std::make_pair(d1, d2);
        auto it = store.find(key);
        if (it == store.end()) {
            FluctuationSpec fs = cfg.fluctuation();
            fs.delta_mu1 = d1;
            fs.delta_mu2 = d2;
            it = store
                     .emplace(key, make_fluctuation_context(cfg.source(), fs,
                                                            cfg.tail_mass))
                     .first;
        }
        return it->second;
    }
};

void warn_range(std::ostream& diag, std::set<double>& warned, double delta) {
    if (delta > 0.10 && warned.insert(delta).second)
        diag << "warning: delta=" << format_double(delta)
             << " exceeds the studied fluctuation range [0, 0.10]; bounds "
                "remain valid but degrade quickly\n";
}

template <class Fn>
void parallel_for(int jobs, std::size_t n, Fn&& fn) {
    jobs = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int w = 0; w < jobs; ++w)
        pool.emplace_back([&, w] {
            const std::size_t lo = n * w / jobs, hi = n * (w + 1) / jobs;
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    for (auto& th : pool) th.join();
}

std::vector<double> axis_grid(const RunConfig& cfg) {
    const long count = static_cast<long>(
        std::floor((cfg.axis_stop - cfg.axis_start) / cfg.axis_step + 1e-9));
    std::vector<double> g(count + 1);
    for (long i = 0; i <= count; ++i) g[i] = cfg.axis_start + i * cfg.axis_step;
    return g;
}

void fill_result_cells(SweepRow& row, const FluctuationResult& res) {
    row.R_c = res.R_c;
    row.R_nc = res.R_nc;
    row.R = res.R;
    row.Y1_L = res.bounds.Y1c_L;
    row.e1_U = res.bounds.e1c_U;
    row.Delta1c_L = res.bounds.Delta1c_L;
    row.Q_t = res.obs.Q_t;
    row.Q_c = res.obs.Q_c;
    row.Q_nc = res.obs.Q_nc;
    row.E_t = res.obs.E_t;
    row.E_c = res.obs.E_c;
    row.E_nc = res.obs.E_nc;
    if (res.vacuous) row.flags.push_back("vacuous_bounds");
    if (res.bounds.e1_clamped) row.flags.push_back("e1_clamped");
    if (res.observation_inconsistent)
        row.flags.push_back("observation_inconsistent");
}

}  // namespace

ConsistencyReport consistency_grid(int points, std::uint64_t seed) {
    ConsistencyReport rep;
    rep.points = points;
    SplitMix64 rng(seed, 0xC0);
    auto fail = [&](int i, const std::string& what) {
        ++rep.failures;
        if (rep.first_failure.empty())
            rep.first_failure = "point " + std::to_string(i) + ": " + what;
    };

    for (int i = 0; i < points; ++i) {
        SourceParams p;
        p.mu1 = rng.uniform(0.1, 1.0);
        p.mu2 = rng.uniform(1e-5, 1e-2);
        p.t = rng.uniform(0.1, 0.9);
        p.eta_d = rng.uniform(0.05, 1.0);
        p.eps_dark = rng.uniform(0.0, 1e-3);
        ChannelParams ch;
        ch.distance = rng.uniform(0.0, 100.0);
        try {
            // Tight tail so the series side is limited by roundoff, not
            // truncation, in the relative comparisons below.
            const PhotonNumberStats st = build_stats(p, 1e-15);

            double sum_t = 0.0;
            for (int n = 0; n <= st.n_cut; ++n) {
                sum_t += st.p_total[n];
                const double gap =
                    std::fabs(st.p_click[n] + st.p_noclick[n] - st.p_total[n]);
                if (gap > 1e-12) {
                    fail(i, "click/no-click additivity at n=" +
                                std::to_string(n));
                    break;
                }
            }
            if (sum_t < 1.0 - 1e-9) fail(i, "p_total normalization deficit");

            double series_nc = 0.0;
            for (int n = 0; n <= st.n_cut; ++n) series_nc += st.p_noclick[n];
            if (std::fabs(series_nc - st.P_noclick) >
                1e-9 * std::max(st.P_noclick, 1e-300))
                fail(i, "P_noclick series vs closed form");

            const Gains g = gains(st, ch);
            if (std::fabs(g.series_Q_t - g.Q_t) > 1e-9 * std::max(g.Q_t, 1e-300))
                fail(i, "Q_t series vs closed form");
            if (std::fabs(g.series_Q_nc - g.Q_nc) >
                1e-9 * std::max(g.Q_nc, 1e-300))
                fail(i, "Q_nc series vs closed form");
            if (std::fabs(g.Q_c + g.Q_nc - g.Q_t) > 1e-12)
                fail(i, "gain additivity");

            const Observables obs = observables(st, ch);
            if (std::fabs(obs.E_c * obs.Q_c + obs.E_nc * obs.Q_nc -
                          obs.E_t * obs.Q_t) > 1e-12)
                fail(i, "weighted QBER additivity");
        } catch (const error& e) {
            fail(i, std::string("exception: ") + e.what());
        }
    }
    return rep;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& diag) {
    cfg.validate();
    const auto t0 = Clock::now();
    const ChannelParams ch0 = cfg.channel();
    const ProtocolParams proto = cfg.protocol();
    const EstimatorVariants variants = cfg.variants();
    const std::vector<double> grid = axis_grid(cfg);
    ContextCache cache{cfg};
    std::set<double> warned;
    std::vector<SweepRow> rows(grid.size());
    int code = 0;

    if (cfg.axis == SweepAxis::delta) {
        const FluctuationContext& ctx0 = cache.get(0.0, 0.0);
        const FluctuationResult base =
            fluctuation_pipeline(ctx0, ch0, proto, variants);
        if (!(base.R > 0.0)) {
            // No reference rate at this distance: nothing to normalize.
            SweepRow r;
            r.axis = grid.front();
            r.flags = {"beyond_cutoff"};
            write_sweep_rows(out, cfg.format, {r});
            diag << "[time] sweep " << ms_since(t0) << " ms\n";
            return 3;
        }
        for (double dd : grid) {
            warn_range(diag, warned, dd);
            cache.get(dd, dd);
        }
        parallel_for(cfg.jobs, grid.size(), [&](std::size_t i) {
            const double dd = grid[i];
            const FluctuationResult res =
                fluctuation_pipeline(cache.get(dd, dd), ch0, proto, variants);
            SweepRow& row = rows[i];
            row.axis = dd;
            fill_result_cells(row, res);
            row.fidelity = res.R / base.R;
            if (dd > 0.10) row.flags.push_back("delta_exceeds_studied_range");
        });
    } else {
        const double d1 = cfg.delta_mu1, d2 = cfg.delta_mu2;
        warn_range(diag, warned, std::max(d1, d2));
        const FluctuationContext& ctx = cache.get(d1, d2);
        const FluctuationContext& ctx0 = cache.get(0.0, 0.0);
        const bool fluctuating = !(d1 == 0.0 && d2 == 0.0);
        parallel_for(cfg.jobs, grid.size(), [&](std::size_t i) {
            ChannelParams ch = ch0;
            ch.distance = grid[i];
            const FluctuationResult res =
                fluctuation_pipeline(ctx, ch, proto, variants);
            SweepRow& row = rows[i];
            row.axis = grid[i];
            fill_result_cells(row, res);
            const double R0 =
                fluctuating ? fluctuation_pipeline(ctx0, ch, proto, variants).R
                            : res.R;
            if (R0 > 0.0)
                row.fidelity = res.R / R0;
            else
                row.flags.push_back("beyond_cutoff");
            if (res.R <= 0.0 && R0 > 0.0) row.flags.push_back("beyond_cutoff");
            if (std::max(d1, d2) > 0.10)
                row.flags.push_back("delta_exceeds_studied_range");
        });
    }

    write_sweep_rows(out, cfg.format, rows);
    diag << "[time] sweep " << ms_since(t0) << " ms\n";
    return code;
}

namespace {

struct CompareRow {
    double delta = 0.0;
    double distance = 0.0;
    std::optional<double> F_passive, F_active2, F_active3;
    std::optional<double> R_passive, R_active2, R_active3;
    double cutoff_passive = 0.0, cutoff_active2 = 0.0, cutoff_active3 = 0.0;
    std::vector<std::string> flags;
};

constexpr const char* kCompareHeader =
    "delta,distance,F_passive,F_active2,F_active3,R_passive,R_active2,"
    "R_active3,cutoff_passive,cutoff_active2,cutoff_active3,flags";

void write_compare_rows(std::ostream& out, OutputFormat fmt,
                        const std::vector<CompareRow>& rows) {
    if (fmt == OutputFormat::csv) {
        out << kCompareHeader << '\n';
        for (const auto& r : rows) {
            out << format_double(r.delta) << ',' << format_double(r.distance)
                << ',' << cell(r.F_passive) << ',' << cell(r.F_active2) << ','
                << cell(r.F_active3) << ',' << cell(r.R_passive) << ','
                << cell(r.R_active2) << ',' << cell(r.R_active3) << ','
                << format_double(r.cutoff_passive) << ','
                << format_double(r.cutoff_active2) << ','
                << format_double(r.cutoff_active3) << ','
                << join_flags(r.flags) << '\n';
        }
    } else {
        for (const auto& r : rows) {
            out << "{\"delta\":" << format_double(r.delta)
                << ",\"distance\":" << format_double(r.distance)
                << ",\"F_passive\":" << json_cell(r.F_passive)
                << ",\"F_active2\":" << json_cell(r.F_active2)
                << ",\"F_active3\":" << json_cell(r.F_active3)
                << ",\"R_passive\":" << json_cell(r.R_passive)
                << ",\"R_active2\":" << json_cell(r.R_active2)
                << ",\"R_active3\":" << json_cell(r.R_active3)
                << ",\"cutoff_passive\":" << format_double(r.cutoff_passive)
                << ",\"cutoff_active2\":" << format_double(r.cutoff_active2)
                << ",\"cutoff_active3\":" << format_double(r.cutoff_active3)
                << ",\"flags\":\"" << join_flags(r.flags) << "\"}\n";
        }
    }
}

}  // namespace

int cmd_compare(const RunConfig& cfg, std::ostream& out, std::ostream& diag) {
    cfg.validate();
    const auto t0 = Clock::now();
    const ProtocolParams proto = cfg.protocol();
    const EstimatorVariants variants = cfg.variants();
    ContextCache cache{cfg};
    std::set<double> warned;
    cache.get(0.0, 0.0);
    for (double dd : cfg.compare_deltas) {
        warn_range(diag, warned, dd);
        cache.get(dd, dd);
    }

    auto channel_at = [&](double d) {
        ChannelParams ch = cfg.channel();
        ch.distance = d;
        return ch;
    };
    auto passive_R = [&](double dd, double d) {
        return fluctuation_pipeline(cache.get(dd, dd), channel_at(d), proto,
                                    variants)
            .R;
    };
    auto active_R = [&](bool vacuum, double dd, double d) {
        ActiveDecoyParams ap;
        ap.mu_signal = cfg.active_mu;
        ap.nu_decoy = cfg.active_nu;
        ap.include_vacuum = vacuum;
        ap.delta = dd;
        return active_rate(ap, channel_at(d), proto).R;
    };
    auto cutoff = [&](const std::function<double(double)>& rate) {
        double c = 0.0;
        for (int d = 1; d <= cfg.cutoff_scan_max; ++d)
            if (rate(static_cast<double>(d)) > 0.0) c = d;
        return c;
    };

    std::vector<CompareRow> rows;
    rows.reserve(cfg.compare_deltas.size() * cfg.compare_distance_max);
    for (double dd : cfg.compare_deltas) {
        const double co_p = cutoff([&](double d) { return passive_R(dd, d); });
        const double co_2 =
            cutoff([&](double d) { return active_R(false, dd, d); });
        const double co_3 =
            cutoff([&](double d) { return active_R(true, dd, d); });
        const std::size_t first = rows.size();
        rows.resize(first + cfg.compare_distance_max);
        parallel_for(cfg.jobs, cfg.compare_distance_max, [&](std::size_t i) {
            const double d = static_cast<double>(i + 1);
            CompareRow& r = rows[first + i];
            r.delta = dd;
            r.distance = d;
            r.cutoff_passive = co_p;
            r.cutoff_active2 = co_2;
            r.cutoff_active3 = co_3;
            const double Rp = passive_R(dd, d), Rp0 = passive_R(0.0, d);
            const double R2 = active_R(false, dd, d),
                         R20 = active_R(false, 0.0, d);
            const double R3 = active_R(true, dd, d),
                         R30 = active_R(true, 0.0, d);
            r.R_passive = Rp;
            r.R_active2 = R2;
            r.R_active3 = R3;
            if (Rp0 > 0.0) r.F_passive = Rp / Rp0;
            if (R20 > 0.0) r.F_active2 = R2 / R20;
            if (R30 > 0.0) r.F_active3 = R3 / R30;
            if (Rp <= 0.0) r.flags.push_back("beyond_cutoff");
            if (dd > 0.10) r.flags.push_back("delta_exceeds_studied_range");
        });
    }

    write_compare_rows(out, cfg.format, rows);
    diag << "[time] compare " << ms_since(t0) << " ms\n";
    return 0;
}

namespace {

struct CheckSink {
    std::ostream& out;
    std::ostream& diag;
    int failures = 0;
    void emit(const std::string& name, bool pass, const std::string& detail,
              bool informational = false) {
        const char* status = informational ? "info" : (pass ? "pass" : "fail");
        out << "{\"check\":\"" << name << "\",\"status\":\"" << status
            << "\",\"detail\":\"" << detail << "\"}\n";
        diag << (informational ? "[info] " : (pass ? "[ ok ] " : "[FAIL] "))
             << name << ": " << detail << '\n';
        if (!pass && !informational) ++failures;
    }
};

}  // namespace

int cmd_validate(const RunConfig& cfg, std::ostream& out, std::ostream& diag) {
    cfg.validate();
    CheckSink sink{out, diag};
    const ProtocolParams proto = cfg.protocol();
    const EstimatorVariants variants = cfg.variants();
    ContextCache cache{cfg};

    {
        const auto t0 = Clock::now();
        const ConsistencyReport rep = consistency_grid(100, cfg.seed);
        sink.emit("consistency_grid", rep.failures == 0,
                  rep.failures == 0
                      ? std::to_string(rep.points) + " random points clean"
                      : rep.first_failure);
        diag << "[time] consistency_grid " << ms_since(t0) << " ms\n";
    }

    {
        const auto t0 = Clock::now();
        const FluctuationContext& ctx0 = cache.get(0.0, 0.0);
        double worst = 0.0;
        for (int d = 1; d <= 150; d += 7) {
            ChannelParams ch = cfg.channel();
            ch.distance = d;
            const double Rf =
                fluctuation_pipeline(ctx0, ch, proto, variants).R;
            const double Rp =
                passive_pipeline(ctx0.nominal, ch, proto, variants.qber).R;
            const double scale = std::max({Rf, Rp, 1e-300});
            worst = std::max(worst, std::fabs(Rf - Rp) / scale);
        }
        sink.emit("interval_collapse", worst <= 1e-10,
                  "max relative gap " + format_double(worst));
        diag << "[time] interval_collapse " << ms_since(t0) << " ms\n";
    }

    {
        const auto t0 = Clock::now();
        bool all_ok = true;
        double worst_z = 0.0;
        for (double d : {0.0, 30.0, 50.0}) {
            ChannelParams ch = cfg.channel();
            ch.distance = d;
            const PhotonNumberStats st = build_stats(cfg.source(), cfg.tail_mass);
            const Observables obs = observables(st, ch);
            const McReport mc = run_trials(cfg.source(), ch, cfg.mc_trials,
                                           cfg.seed, cfg.jobs);
            const double N = static_cast<double>(mc.trials);
            auto zscore = [&](double emp, double ana, double se) {
                return se > 0.0 ? std::fabs(emp - ana) / se
                                : (emp == ana ? 0.0 : 1e9);
            };
            auto check = [&](double emp, double ana) {
                const double se = std::sqrt(
                    std::max(ana * (1.0 - ana), 0.0) / N);
                const double z = zscore(emp, ana, se);
                worst_z = std::max(worst_z, z);
                if (z > 4.0) all_ok = false;
            };
            check(mc.Q_t, obs.Q_t);
            check(mc.Q_c, obs.Q_c);
            check(mc.Q_nc, obs.Q_nc);
            {
                const double det = obs.Q_t * N;
                const double se =
                    std::sqrt(std::max(obs.E_t * (1.0 - obs.E_t), 0.0) / det);
                const double z = zscore(mc.E_t, obs.E_t, se);
                worst_z = std::max(worst_z, z);
                if (z > 4.0) all_ok = false;
            }
            for (int n = 0; n <= 5 && n <= st.n_cut; ++n)
                check(mc.freq_noclick[n], st.p_noclick[n]);
        }
        sink.emit("mc_agreement", all_ok,
                  "worst z-score " + format_double(worst_z) + " at " +
                      std::to_string(cfg.mc_trials) + " trials");
        diag << "[time] mc_agreement " << ms_since(t0) << " ms\n";
    }

    {
        const auto t0 = Clock::now();
        for (double dd : {0.0, 0.02, 0.05, 0.10}) {
            BatterySpec bs;
            bs.instances = cfg.battery_instances;
            bs.seed = cfg.seed;
            bs.delta = dd;
            bs.negative_control = cfg.negative_control;
            const BatteryReport rep = soundness_battery(bs);
            char lbl[32];
            std::snprintf(lbl, sizeof lbl, "%g", dd);  // display label only
            std::string name = std::string("soundness_battery_delta_") + lbl;
            std::string detail =
                std::to_string(rep.checks) + " checks, " +
                std::to_string(rep.violation_count) + " violations";
            if (!rep.violations.empty()) {
                const auto& v = rep.violations.front();
                detail += "; first: instance " + std::to_string(v.instance) +
                          " " + v.check + " bound " + format_double(v.bound) +
                          " vs truth " + format_double(v.truth);
            }
            sink.emit(name, rep.passed(), detail);
        }
        if (!cfg.negative_control) {
            BatterySpec bs;
            bs.instances = std::min(cfg.battery_instances, 20);
            bs.seed = cfg.seed;
            bs.delta = 0.05;
            bs.negative_control = true;
            const BatteryReport rep = soundness_battery(bs);
            sink.emit("negative_control_detects", rep.violation_count > 0,
                      std::to_string(rep.violation_count) +
                          " planted violations reported");
        }
        diag << "[time] batteries " << ms_since(t0) << " ms\n";
    }

    {
        // Informational: spread between the QBER bookkeeping conventions.
        const FluctuationContext& ctx0 = cache.get(0.0, 0.0);
        EstimatorVariants lit = variants;
        lit.qber = QberConvention::legacy_literal;
        EstimatorVariants cons = variants;
        cons.qber = QberConvention::weighted_consistent;
        double worst = 0.0;
        for (double d : {10.0, 30.0, 50.0, 100.0}) {
            ChannelParams ch = cfg.channel();
            ch.distance = d;
            const double Rl = fluctuation_pipeline(ctx0, ch, proto, lit).R;
            const double Rc = fluctuation_pipeline(ctx0, ch, proto, cons).R;
            if (Rc > 0.0) worst = std::max(worst, std::fabs(Rl - Rc) / Rc);
        }
        sink.emit("qber_convention_spread", true,
                  "max relative rate difference " + format_double(worst), true);
    }

    return sink.failures == 0 ? 0 : 1;
}

}  // namespace pdqkd
