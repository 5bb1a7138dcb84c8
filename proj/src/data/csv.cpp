#include "autocon/data.hpp"

#include "autocon/errors.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace autocon {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        out.emplace_back(trim(std::string_view(line).substr(pos, comma - pos)));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::optional<double> parse_number(std::string_view s) {
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

bool is_timestamp(std::string_view s) { return !parse_number(s) && parse_timestamp(s).has_value(); }

}  // namespace

std::string to_string(Frequency f) {
    switch (f) {
        case Frequency::none: return "none";
        case Frequency::min10: return "10min";
        case Frequency::min15: return "15min";
        case Frequency::hourly: return "hourly";
        case Frequency::daily: return "daily";
        case Frequency::weekly: return "weekly";
    }
    return "none";
}

Frequency parse_frequency(std::string_view text) {
    if (text == "none" || text.empty()) return Frequency::none;
    if (text == "10min" || text == "10t") return Frequency::min10;
    if (text == "15min" || text == "15t" || text == "t") return Frequency::min15;
    if (text == "hourly" || text == "h") return Frequency::hourly;
    if (text == "daily" || text == "d") return Frequency::daily;
    if (text == "weekly" || text == "w") return Frequency::weekly;
    throw ConfigError("unknown frequency '" + std::string(text) + "'");
}

std::optional<std::int64_t> parse_timestamp(std::string_view text) {
    text = trim(text);
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    char sep = 0;
    const std::string buf(text);
    const int n = std::sscanf(buf.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d", &y, &mo, &d, &sep, &h, &mi, &s);
    if (n < 3) return std::nullopt;
    if (n > 3 && sep != ' ' && sep != 'T') return std::nullopt;
    if (n > 3 && n < 6) return std::nullopt;
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 60) return std::nullopt;
    const auto secs = sys_days{ymd}.time_since_epoch() + hours{h} + minutes{mi} + seconds{s};
    return duration_cast<seconds>(secs).count();
}

Frequency infer_frequency(const std::vector<std::int64_t>& timestamps) {
    if (timestamps.size() < 2) return Frequency::none;
    std::vector<std::int64_t> diffs;
    diffs.reserve(timestamps.size() - 1);
    for (std::size_t i = 1; i < timestamps.size(); ++i) diffs.push_back(timestamps[i] - timestamps[i - 1]);
    std::nth_element(diffs.begin(), diffs.begin() + diffs.size() / 2, diffs.end());
    switch (diffs[diffs.size() / 2]) {
        case 600: return Frequency::min10;
        case 900: return Frequency::min15;
        case 3600: return Frequency::hourly;
        case 86400: return Frequency::daily;
        case 604800: return Frequency::weekly;
        default: return Frequency::none;
    }
}

std::vector<double> Series::channel(std::size_t ch) const {
    std::vector<double> out(length());
    for (std::size_t t = 0; t < out.size(); ++t) out[t] = at(t, ch);
    return out;
}

Series make_series(std::string name, Tensor values) {
    if (values.rank() != 2) throw DimensionError("series values must be [T x c], got " + shape_str(values.shape));
    Series s;
    s.name = std::move(name);
    for (std::size_t c = 0; c < values.shape[1]; ++c) s.channel_names.push_back("ch" + std::to_string(c));
    s.values = std::move(values);
    return s;
}

Series load_csv(const std::filesystem::path& path, const CsvOptions& options) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());

    std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        rows.emplace_back(line_no, split_fields(line));
    }
    if (rows.empty()) throw DataError(path.string() + ": no data rows");

    const auto& first = rows.front().second;
    const bool has_header = std::any_of(first.begin(), first.end(),
                                        [](const std::string& f) { return !parse_number(f) && !is_timestamp(f); });
    std::vector<std::string> names;
    if (has_header) {
        names = first;
        rows.erase(rows.begin());
    } else {
        for (std::size_t i = 0; i < first.size(); ++i) names.push_back("col" + std::to_string(i));
    }
    if (rows.empty()) throw DataError(path.string() + ": header but no data rows");

    std::optional<std::size_t> date_col;
    if (options.date_column) {
        const auto it = std::find(names.begin(), names.end(), *options.date_column);
        if (it != names.end()) {
            date_col = static_cast<std::size_t>(it - names.begin());
        } else if (auto idx = parse_number(*options.date_column); idx && !has_header) {
            date_col = static_cast<std::size_t>(*idx);
        } else {
            throw DataError(path.string() + ": date column '" + *options.date_column + "' not found");
        }
    } else if (has_header) {
        const auto it = std::find(names.begin(), names.end(), "date");
        if (it != names.end()) date_col = static_cast<std::size_t>(it - names.begin());
    } else if (is_timestamp(rows.front().second.front())) {
        date_col = 0;
    }

    std::vector<std::size_t> value_cols;
    if (options.value_columns.empty()) {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (i != date_col) value_cols.push_back(i);
    } else {
        for (const auto& name : options.value_columns) {
            const auto it = std::find(names.begin(), names.end(), name);
            if (it == names.end()) throw DataError(path.string() + ": value column '" + name + "' not found");
            value_cols.push_back(static_cast<std::size_t>(it - names.begin()));
        }
    }
    if (value_cols.empty()) throw DataError(path.string() + ": no value columns");

    Series series;
    series.name = path.stem().string();
    for (const auto c : value_cols) series.channel_names.push_back(names[c]);
    std::vector<double> values;
    values.reserve(rows.size() * value_cols.size());
    for (const auto& [row_no, fields] : rows) {
        if (fields.size() != names.size()) {
            throw DataError(path.string() + ": row " + std::to_string(row_no) + " has " + std::to_string(fields.size()) +
                            " fields, expected " + std::to_string(names.size()));
        }
        for (const auto c : value_cols) {
            const auto v = parse_number(fields[c]);
            if (!v || !std::isfinite(*v)) {
                throw DataError(path.string() + ": row " + std::to_string(row_no) + " column '" + names[c] +
                                "' has missing or non-numeric value '" + fields[c] + "'");
            }
            values.push_back(*v);
        }
        if (date_col) {
            const auto ts = parse_timestamp(fields[*date_col]);
            if (!ts) {
                throw DataError(path.string() + ": row " + std::to_string(row_no) + " has unparseable timestamp '" +
                                fields[*date_col] + "'");
            }
            if (!series.timestamps.empty() && *ts <= series.timestamps.back()) {
                throw DataError(path.string() + ": row " + std::to_string(row_no) + " timestamps not strictly increasing");
            }
            series.timestamps.push_back(*ts);
        }
    }
    series.values = Tensor({rows.size(), value_cols.size()}, std::move(values));
    series.freq = infer_frequency(series.timestamps);
    return series;
}

}  // namespace autocon
