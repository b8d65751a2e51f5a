#include "pdqkd/config.hpp"

#include "pdqkd/numerics.hpp"

#include <cerrno>
#include <climits>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace pdqkd {

namespace {

template <class T>
struct KeyRef {
    const char* key;
    T RunConfig::* member;
};

constexpr KeyRef<double> kDoubleKeys[] = {
    {"mu1", &RunConfig::mu1},
    {"mu2", &RunConfig::mu2},
    {"t", &RunConfig::t},
    {"eta_d", &RunConfig::eta_d},
    {"eps_dark", &RunConfig::eps_dark},
    {"alpha", &RunConfig::alpha},
    {"distance", &RunConfig::distance},
    {"eta_bob", &RunConfig::eta_bob},
    {"Y0", &RunConfig::Y0},
    {"e_d", &RunConfig::e_d},
    {"e0", &RunConfig::e0},
    {"q_sifting", &RunConfig::q_sifting},
    {"f_ec", &RunConfig::f_ec},
    {"delta_mu1", &RunConfig::delta_mu1},
    {"delta_mu2", &RunConfig::delta_mu2},
    {"active_mu", &RunConfig::active_mu},
    {"active_nu", &RunConfig::active_nu},
    {"axis_start", &RunConfig::axis_start},
    {"axis_stop", &RunConfig::axis_stop},
    {"axis_step", &RunConfig::axis_step},
    {"tail_mass", &RunConfig::tail_mass},
};

constexpr KeyRef<int> kIntKeys[] = {
    {"grid_per_axis", &RunConfig::grid_per_axis},
    {"slice_grid", &RunConfig::slice_grid},
    {"compare_distance_max", &RunConfig::compare_distance_max},
    {"cutoff_scan_max", &RunConfig::cutoff_scan_max},
    {"battery_instances", &RunConfig::battery_instances},
    {"jobs", &RunConfig::jobs},
};

constexpr KeyRef<std::uint64_t> kU64Keys[] = {
    {"mc_trials", &RunConfig::mc_trials},
    {"seed", &RunConfig::seed},
};

constexpr KeyRef<bool> kBoolKeys[] = {
    {"negative_control", &RunConfig::negative_control},
    {"qber_literal", &RunConfig::qber_literal},
    {"simplified_e1", &RunConfig::simplified_e1},
    {"unclamped_total", &RunConfig::unclamped_total},
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end != v.c_str() + v.size() || v.empty() || errno == ERANGE)
        throw config_error("config: bad number for '" + key + "': " + v);
    return x;
}

long long parse_int(const std::string& key, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (end != v.c_str() + v.size() || v.empty() || errno == ERANGE)
        throw config_error("config: bad integer for '" + key + "': " + v);
    return x;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (end != v.c_str() + v.size() || v.empty() || errno == ERANGE ||
        v.find('-') != std::string::npos)
        throw config_error("config: bad unsigned integer for '" + key +
                           "': " + v);
    return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw config_error("config: bad boolean for '" + key + "': " + v);
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

SourceParams RunConfig::source() const {
    SourceParams p;
    p.mu1 = mu1;
    p.mu2 = mu2;
    p.t = t;
    p.eta_d = eta_d;
    p.eps_dark = eps_dark;
    return p;
}

ChannelParams RunConfig::channel() const {
    ChannelParams c;
    c.alpha = alpha;
    c.distance = distance;
    c.eta_bob = eta_bob;
    c.Y0 = Y0;
    c.e_d = e_d;
    c.e0 = e0;
    return c;
}

ProtocolParams RunConfig::protocol() const {
    ProtocolParams p;
    p.q_sifting = q_sifting;
    p.f_ec = f_ec;
    return p;
}

FluctuationSpec RunConfig::fluctuation() const {
    FluctuationSpec f;
    f.delta_mu1 = delta_mu1;
    f.delta_mu2 = delta_mu2;
    f.grid_per_axis = grid_per_axis;
    f.slice_grid = slice_grid;
    return f;
}

EstimatorVariants RunConfig::variants() const {
    EstimatorVariants v;
    v.qber = qber_literal ? QberConvention::legacy_literal
                          : QberConvention::weighted_consistent;
    v.simplified_e1 = simplified_e1;
    v.unclamped_total = unclamped_total;
    return v;
}

void RunConfig::validate() const {
    try {
        source().validate();
        channel().validate();
        protocol().validate();
        fluctuation().validate();
    } catch (const domain_error& e) {
        throw config_error(std::string("config: ") + e.what());
    }
    if (!(axis_step > 0.0) || axis_stop < axis_start)
        throw config_error("config: axis grid must be nonempty and increasing");
    if (!(tail_mass > 0.0 && tail_mass <= 1e-6))
        throw config_error("config: tail_mass outside (0, 1e-6]");
    if (compare_deltas.empty())
        throw config_error("config: compare_deltas is empty");
    for (double d : compare_deltas)
        if (!(d >= 0.0 && d < 0.5))
            throw config_error("config: compare delta outside [0, 0.5)");
    if (compare_distance_max < 1 || cutoff_scan_max < compare_distance_max)
        throw config_error("config: bad compare/cutoff distance limits");
    if (!(active_nu > 0.0) || !(active_nu < active_mu))
        throw config_error("config: need 0 < active_nu < active_mu");
    if (mc_trials < 1 || battery_instances < 1 || jobs < 1)
        throw config_error("config: workloads must be >= 1");
}

void apply_override(RunConfig& cfg, const std::string& key,
                    const std::string& value) {
    for (const auto& k : kDoubleKeys)
        if (key == k.key) {
            cfg.*(k.member) = parse_double(key, value);
            return;
        }
    for (const auto& k : kIntKeys)
        if (key == k.key) {
            const long long x = parse_int(key, value);
            if (x < INT_MIN || x > INT_MAX)
                throw config_error("config: integer out of range for '" + key +
                                   "'");
            cfg.*(k.member) = static_cast<int>(x);
            return;
        }
    for (const auto& k : kU64Keys)
        if (key == k.key) {
            cfg.*(k.member) = parse_u64(key, value);
            return;
        }
    for (const auto& k : kBoolKeys)
        if (key == k.key) {
            cfg.*(k.member) = parse_bool(key, value);
            return;
        }
    if (key == "axis") {
        if (value == "distance")
            cfg.axis = SweepAxis::distance;
        else if (value == "delta")
            cfg.axis = SweepAxis::delta;
        else
            throw config_error("config: axis must be 'distance' or 'delta'");
        return;
    }
    if (key == "format") {
        if (value == "csv")
            cfg.format = OutputFormat::csv;
        else if (value == "jsonl")
            cfg.format = OutputFormat::jsonl;
        else
            throw config_error("config: format must be 'csv' or 'jsonl'");
        return;
    }
    if (key == "out") {
        cfg.out = value;
        return;
    }
    if (key == "compare_deltas") {
        std::vector<double> ds;
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) ds.push_back(parse_double(key, item));
        }
        if (ds.empty())
            throw config_error("config: compare_deltas needs at least one value");
        cfg.compare_deltas = std::move(ds);
        return;
    }
    throw config_error("config: unknown key '" + key + "'");
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("config: line " + std::to_string(lineno) +
                               " has no '='");
        try {
            apply_override(cfg, trim(line.substr(0, eq)),
                           trim(line.substr(eq + 1)));
        } catch (const config_error& e) {
            std::string msg = e.what();
            if (msg.rfind("config: ", 0) == 0) msg.erase(0, 8);
            throw config_error("config: line " + std::to_string(lineno) +
                               ": " + msg);
        }
    }
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("config: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::string serialize_config(const RunConfig& cfg) {
    std::string out;
    auto emit = [&](const std::string& k, const std::string& v) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    };
    for (const auto& k : kDoubleKeys) emit(k.key, format_double(cfg.*(k.member)));
    for (const auto& k : kIntKeys) emit(k.key, std::to_string(cfg.*(k.member)));
    for (const auto& k : kU64Keys) emit(k.key, std::to_string(cfg.*(k.member)));
    for (const auto& k : kBoolKeys)
        emit(k.key, cfg.*(k.member) ? "true" : "false");
    emit("axis", cfg.axis == SweepAxis::distance ? "distance" : "delta");
    emit("format", cfg.format == OutputFormat::csv ? "csv" : "jsonl");
    if (!cfg.out.empty()) emit("out", cfg.out);
    std::string ds;
    for (std::size_t i = 0; i < cfg.compare_deltas.size(); ++i) {
        if (i) ds += ',';
        ds += format_double(cfg.compare_deltas[i]);
    }
    emit("compare_deltas", ds);
    return out;
}

}  // namespace pdqkd
