#include "autocon/config.hpp"

#include "autocon/errors.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace autocon {
namespace {

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("key '" + key + "': not a number: '" + v + "'");
    return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
        throw ConfigError("key '" + key + "': not a non-negative integer: '" + v + "'");
    }
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ConfigError("key '" + key + "': not a boolean: '" + v + "'");
}

std::vector<int> to_kernels(const std::string& key, const std::string& v) {
    std::vector<int> out;
    std::istringstream is(v);
    std::string item;
    while (std::getline(is, item, ',')) out.push_back(static_cast<int>(to_uint(key, trim(item))));
    if (out.empty()) throw ConfigError("key '" + key + "': empty kernel list");
    return out;
}

std::string kernels_str(const std::vector<int>& ks) {
    std::string out;
    for (std::size_t i = 0; i < ks.size(); ++i) out += (i ? "," : "") + std::to_string(ks[i]);
    return out;
}

std::string components_str(const std::vector<std::pair<double, double>>& cs) {
    std::string out;
    for (std::size_t i = 0; i < cs.size(); ++i) out += (i ? "," : "") + fmt_double(cs[i].first) + ":" + fmt_double(cs[i].second);
    return out;
}

struct Key {
    const char* name;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define AC_STR(field)                                                                 \
    Key { #field, [](RunConfig& c, const std::string& v) { c.field = v; },            \
          [](const RunConfig& c) { return c.field; } }
#define AC_UINT(field)                                                                                   \
    Key { #field, [](RunConfig& c, const std::string& v) { c.field = to_uint(#field, v); },              \
          [](const RunConfig& c) { return std::to_string(c.field); } }
#define AC_DBL(field)                                                                                    \
    Key { #field, [](RunConfig& c, const std::string& v) { c.field = to_double(#field, v); },            \
          [](const RunConfig& c) { return fmt_double(c.field); } }
#define AC_BOOL(field)                                                                                   \
    Key { #field, [](RunConfig& c, const std::string& v) { c.field = to_bool(#field, v); },              \
          [](const RunConfig& c) { return std::string(c.field ? "1" : "0"); } }

const std::vector<Key>& keys() {
    static const std::vector<Key> table = {
        AC_STR(data),
        AC_STR(date_column),
        AC_STR(value_columns),
        AC_STR(freq),
        Key{"synth_components", [](RunConfig& c, const std::string& v) { c.synth.components = parse_components(v); },
            [](const RunConfig& c) { return components_str(c.synth.components); }},
        Key{"synth_slope", [](RunConfig& c, const std::string& v) { c.synth.slope = to_double("synth_slope", v); },
            [](const RunConfig& c) { return fmt_double(c.synth.slope); }},
        Key{"synth_noise", [](RunConfig& c, const std::string& v) { c.synth.noise = to_double("synth_noise", v); },
            [](const RunConfig& c) { return fmt_double(c.synth.noise); }},
        Key{"synth_length", [](RunConfig& c, const std::string& v) { c.synth.length = to_uint("synth_length", v); },
            [](const RunConfig& c) { return std::to_string(c.synth.length); }},
        Key{"synth_seed", [](RunConfig& c, const std::string& v) { c.synth.seed = to_uint("synth_seed", v); },
            [](const RunConfig& c) { return std::to_string(c.synth.seed); }},
        Key{"split_ratios",
            [](RunConfig& c, const std::string& v) {
                std::istringstream is(v);
                std::string a, b, d;
                if (!std::getline(is, a, ':') || !std::getline(is, b, ':') || !std::getline(is, d)) {
                    throw ConfigError("key 'split_ratios': expected train:val:test, got '" + v + "'");
                }
                c.split = {to_double("split_ratios", trim(a)), to_double("split_ratios", trim(b)), to_double("split_ratios", trim(d))};
            },
            [](const RunConfig& c) {
                return fmt_double(c.split.train) + ":" + fmt_double(c.split.val) + ":" + fmt_double(c.split.test);
            }},
        AC_DBL(period_hint),
        AC_UINT(input),
        AC_UINT(output),
        AC_UINT(width),
        AC_UINT(depth),
        Key{"conv_kernel", [](RunConfig& c, const std::string& v) { c.conv_kernel = static_cast<int>(to_uint("conv_kernel", v)); },
            [](const RunConfig& c) { return std::to_string(c.conv_kernel); }},
        Key{"kernels", [](RunConfig& c, const std::string& v) { c.kernels = to_kernels("kernels", v); },
            [](const RunConfig& c) { return kernels_str(c.kernels); }},
        AC_BOOL(no_short),
        AC_BOOL(no_long),
        AC_DBL(lambda),
        AC_DBL(tau),
        AC_BOOL(no_autocon),
        Key{"smoothing_k", [](RunConfig& c, const std::string& v) { c.smoothing_k = static_cast<int>(to_uint("smoothing_k", v)); },
            [](const RunConfig& c) { return std::to_string(c.smoothing_k); }},
        AC_UINT(batch),
        AC_UINT(epochs),
        AC_UINT(patience),
        AC_UINT(iters_per_epoch),
        AC_DBL(lr),
        AC_UINT(seed),
        AC_UINT(val_stride),
        AC_STR(output_dir),
        AC_UINT(repr_smooth_k),
    };
    return table;
}

#undef AC_STR
#undef AC_UINT
#undef AC_DBL
#undef AC_BOOL

}  // namespace

std::vector<std::pair<double, double>> parse_components(const std::string& text) {
    std::vector<std::pair<double, double>> out;
    std::istringstream is(text);
    std::string item;
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ConfigError("synth component '" + item + "' is not period:amplitude");
        out.emplace_back(to_double("synth_components", trim(item.substr(0, colon))),
                         to_double("synth_components", trim(item.substr(colon + 1))));
    }
    return out;
}

void RunConfig::validate() const {
    window_spec().validate();
    if (no_short && no_long) throw ConfigError("no_short and no_long together leave a mean-only model");
    if (data.empty() && synth.length == 0) throw ConfigError("either 'data' or 'synth_length' must be set");
    for (const auto& [p, a] : synth.components) {
        if (!(p > 0.0)) throw ConfigError("synth period must be positive");
    }
    if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
    if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
    if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
    if (batch < 1) throw ConfigError("batch must be >= 1");
    if (width < 1) throw ConfigError("width must be >= 1");
    if (conv_kernel < 1) throw ConfigError("conv_kernel must be >= 1");
    if (smoothing_k != 0 && smoothing_k % 2 == 0) throw ConfigError("smoothing_k must be odd");
    for (const int k : kernels) {
        if (k < 1 || k % 2 == 0) throw ConfigError("kernels must be odd and >= 1");
    }
    if (val_stride < 1) throw ConfigError("val_stride must be >= 1");
    if (repr_smooth_k < 1 || repr_smooth_k % 2 == 0) throw ConfigError("repr_smooth_k must be odd and >= 1");
    if (period_hint < 0.0) throw ConfigError("period_hint must be >= 0");
    if (!freq.empty()) (void)parse_frequency(freq);
}

void apply_setting(RunConfig& config, const std::string& key, const std::string& value) {
    for (const auto& k : keys()) {
        if (key == k.name) {
            k.set(config, trim(value));
            return;
        }
    }
    throw ConfigError("unknown config key '" + key + "'");
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected 'key = value'");
        }
        apply_setting(base, trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    return base;
}

std::vector<std::pair<std::string, std::string>> config_echo(const RunConfig& config) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& k : keys()) out.emplace_back(k.name, k.get(config));
    return out;
}

RunConfig config_from_echo(const std::vector<std::pair<std::string, std::string>>& echo) {
    RunConfig c;
    for (const auto& [k, v] : echo) apply_setting(c, k, v);
    return c;
}

std::string config_hash(const RunConfig& config) {
    std::uint64_t h = 1469598103934665603ULL;
    const auto mix = [&h](std::string_view s) {
        for (const unsigned char ch : s) {
            h ^= ch;
            h *= 1099511628211ULL;
        }
    };
    for (const auto& [k, v] : config_echo(config)) {
        mix(k);
        mix("=");
        mix(v);
        mix("\n");
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& k : keys()) out.emplace_back(k.name);
    return out;
}

}  // namespace autocon
