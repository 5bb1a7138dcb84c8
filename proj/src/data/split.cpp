#include "autocon/data.hpp"

#include "autocon/errors.hpp"
#include "autocon/io.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace autocon {

void WindowSpec::validate() const {
    if (input < 1 || output < 1) {
        throw ConfigError("window input and output lengths must be >= 1 (got I=" + std::to_string(input) +
                          ", O=" + std::to_string(output) + ")");
    }
}

std::size_t window_count(std::size_t length, std::size_t input, std::size_t output) {
    const std::size_t w = input + output;
    if (length < w) {
        throw DomainError("series length " + std::to_string(length) + " shorter than window " + std::to_string(w));
    }
    return length - w + 1;
}

std::vector<std::size_t> Segment::window_starts(const WindowSpec& spec) const {
    std::vector<std::size_t> starts;
    const std::size_t first = begin - context;
    if (end < first + spec.window()) return starts;
    for (std::size_t t = first; t + spec.window() <= end; ++t) starts.push_back(t);
    return starts;
}

std::size_t Segment::window_count(const WindowSpec& spec) const {
    const std::size_t first = begin - context;
    return end < first + spec.window() ? 0 : end - first - spec.window() + 1;
}

Series Segment::materialize() const {
    Series out;
    out.name = series->name;
    out.channel_names = series->channel_names;
    out.freq = series->freq;
    const std::size_t c = series->channels();
    out.values = Tensor({length(), c}, std::vector<double>(series->values.data.begin() + begin * c,
                                                           series->values.data.begin() + end * c));
    if (series->has_timestamps()) {
        out.timestamps.assign(series->timestamps.begin() + begin, series->timestamps.begin() + end);
    }
    return out;
}

Split chrono_split(std::shared_ptr<const Series> series, SplitRatios ratios, const WindowSpec& spec) {
    spec.validate();
    if (!(ratios.train > 0.0) || !(ratios.val > 0.0) || !(ratios.test > 0.0)) {
        throw ConfigError("split ratios must all be positive");
    }
    const double total = ratios.train + ratios.val + ratios.test;
    ratios = {ratios.train / total, ratios.val / total, ratios.test / total};

    const std::size_t T = series->length();
    const auto portion = [T](double r) {
        return static_cast<std::size_t>(std::floor(static_cast<double>(T) * r + 1e-9));
    };
    const std::size_t n_train = portion(ratios.train);
    const std::size_t n_test = portion(ratios.test);
    if (n_train + n_test > T) throw ConfigError("split ratios leave no validation data");
    const std::size_t n_val = T - n_train - n_test;

    const std::size_t w = spec.window();
    const auto check = [w](const char* name, std::size_t len) {
        if (len < w) {
            throw ConfigError(std::string(name) + " split has " + std::to_string(len) + " points, shorter than window " +
                              std::to_string(w));
        }
    };
    check("train", n_train);
    check("val", n_val);
    check("test", n_test);

    Split split;
    split.ratios = ratios;
    split.train = Segment{series, 0, n_train, 0};
    split.val = Segment{series, n_train, n_train + n_val, spec.input};
    split.test = Segment{series, n_train + n_val, T, spec.input};
    return split;
}

std::string split_manifest_text(const Split& split) {
    std::ostringstream out;
    out.precision(17);
    out << "length = " << split.train.series->length() << '\n';
    out << "ratios = " << split.ratios.train << ',' << split.ratios.val << ',' << split.ratios.test << '\n';
    const std::pair<const char*, const Segment*> segs[] = {{"train", &split.train}, {"val", &split.val}, {"test", &split.test}};
    for (const auto& [name, seg] : segs) {
        out << name << "_begin = " << seg->begin << '\n';
        out << name << "_end = " << seg->end << '\n';
        out << name << "_context = " << seg->context << '\n';
    }
    return out.str();
}

void write_split_manifest(const std::filesystem::path& path, const Split& split) {
    write_text_atomic(path, split_manifest_text(split));
}

SplitManifest read_split_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto key = line.substr(0, eq);
        auto val = line.substr(eq + 1);
        key.erase(key.find_last_not_of(' ') + 1);
        val.erase(0, val.find_first_not_of(' '));
        kv[key] = val;
    }
    const auto get = [&](const std::string& key) -> const std::string& {
        const auto it = kv.find(key);
        if (it == kv.end()) throw DataError(path.string() + ": missing key '" + key + "'");
        return it->second;
    };
    SplitManifest m;
    m.length = std::stoull(get("length"));
    {
        std::istringstream rs(get("ratios"));
        char comma = 0;
        rs >> m.ratios.train >> comma >> m.ratios.val >> comma >> m.ratios.test;
        if (!rs) throw DataError(path.string() + ": malformed ratios");
    }
    const char* names[] = {"train", "val", "test"};
    for (std::size_t i = 0; i < 3; ++i) {
        m.begin[i] = std::stoull(get(std::string(names[i]) + "_begin"));
        m.end[i] = std::stoull(get(std::string(names[i]) + "_end"));
        m.context[i] = std::stoull(get(std::string(names[i]) + "_context"));
    }
    return m;
}

}  // namespace autocon
