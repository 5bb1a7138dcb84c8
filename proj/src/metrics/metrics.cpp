#include "autocon/metrics.hpp"

#include "autocon/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace autocon {
namespace {

void require_same(const Tensor& a, const Tensor& b, const char* what) {
    if (a.shape != b.shape) {
        throw DimensionError(std::string(what) + ": shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
    }
    if (a.size() == 0) throw DomainError(std::string(what) + ": empty input");
}

std::vector<double> column(const Tensor& t, std::size_t ch) {
    const std::size_t L = t.shape[0], c = t.shape[1];
    std::vector<double> out(L);
    for (std::size_t i = 0; i < L; ++i) out[i] = t.data[i * c + ch];
    return out;
}

template <typename Fn>
double per_channel_mean(const Tensor& pred, const Tensor& truth, const char* what, Fn&& fn) {
    require_same(pred, truth, what);
    if (pred.rank() != 2) throw DimensionError(std::string(what) + ": expected [L x c], got " + shape_str(pred.shape));
    const std::size_t c = pred.shape[1];
    double acc = 0.0;
    for (std::size_t ch = 0; ch < c; ++ch) acc += fn(dtw_align(column(pred, ch), column(truth, ch)));
    return acc / static_cast<double>(c);
}

}  // namespace

double mse(const Tensor& pred, const Tensor& truth) {
    require_same(pred, truth, "mse");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += (pred[i] - truth[i]) * (pred[i] - truth[i]);
    return acc / static_cast<double>(pred.size());
}

double mae(const Tensor& pred, const Tensor& truth) {
    require_same(pred, truth, "mae");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += std::abs(pred[i] - truth[i]);
    return acc / static_cast<double>(pred.size());
}

DtwAlignment dtw_align(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size(), m = b.size();
    if (n == 0 || m == 0) throw DomainError("dtw_align: empty sequence");
    std::vector<double> D(n * m);
    const auto cost = [&](std::size_t i, std::size_t j) { return (a[i] - b[j]) * (a[i] - b[j]); };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double best;
            if (i == 0 && j == 0) {
                best = 0.0;
            } else if (i == 0) {
                best = D[j - 1];
            } else if (j == 0) {
                best = D[(i - 1) * m];
            } else {
                best = std::min({D[(i - 1) * m + j - 1], D[(i - 1) * m + j], D[i * m + j - 1]});
            }
            D[i * m + j] = best + cost(i, j);
        }

    DtwAlignment out;
    out.distance = D[n * m - 1];
    std::size_t i = n - 1, j = m - 1;
    out.path.emplace_back(i, j);
    while (i > 0 || j > 0) {
        if (i == 0) {
            --j;
        } else if (j == 0) {
            --i;
        } else {
            const double diag = D[(i - 1) * m + j - 1];
            const double down = D[(i - 1) * m + j];
            const double right = D[i * m + j - 1];
            if (diag <= down && diag <= right) {
                --i;
                --j;
            } else if (down <= right) {
                --i;
            } else {
                --j;
            }
        }
        out.path.emplace_back(i, j);
    }
    std::reverse(out.path.begin(), out.path.end());
    return out;
}

double temporal_distortion(const AlignmentPath& path) {
    if (path.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& [i, j] : path) {
        const double d = static_cast<double>(i) - static_cast<double>(j);
        acc += d * d;
    }
    return acc / static_cast<double>(path.size());
}

double shape_dtw(const Tensor& pred, const Tensor& truth) {
    return per_channel_mean(pred, truth, "shape_dtw", [](const DtwAlignment& a) { return a.distance; });
}

double temporal_dtw(const Tensor& pred, const Tensor& truth) {
    return per_channel_mean(pred, truth, "temporal_dtw",
                            [](const DtwAlignment& a) { return temporal_distortion(a.path); });
}

EvalReport evaluate_predictions(std::span<const Tensor> preds, std::span<const Tensor> truths,
                                std::span<const std::size_t> starts) {
    if (preds.size() != truths.size() || preds.size() != starts.size()) {
        throw DimensionError("evaluate: prediction, target and start counts differ");
    }
    if (preds.empty()) throw DomainError("evaluate: no windows");
    EvalReport report;
    const std::size_t O = preds[0].shape.at(0);
    const std::size_t c = preds[0].shape.at(1);
    report.channels = c;
    report.horizon_mse.assign(O, 0.0);
    report.horizon_mae.assign(O, 0.0);
    for (std::size_t w = 0; w < preds.size(); ++w) {
        const auto& p = preds[w];
        const auto& y = truths[w];
        require_same(p, y, "evaluate");
        if (p.shape[0] != O || p.shape[1] != c) throw DimensionError("evaluate: windows differ in shape");
        WindowMetrics m;
        m.start = starts[w];
        m.mse = mse(p, y);
        m.mae = mae(p, y);
        m.shape_dtw = shape_dtw(p, y);
        m.temporal_dtw = temporal_dtw(p, y);
        report.windows.push_back(m);
        for (std::size_t h = 0; h < O; ++h)
            for (std::size_t ch = 0; ch < c; ++ch) {
                const double e = p.data[h * c + ch] - y.data[h * c + ch];
                report.horizon_mse[h] += e * e;
                report.horizon_mae[h] += std::abs(e);
            }
    }
    const double denom = static_cast<double>(preds.size() * c);
    for (std::size_t h = 0; h < O; ++h) {
        report.horizon_mse[h] /= denom;
        report.horizon_mae[h] /= denom;
    }
    const double nw = static_cast<double>(report.windows.size());
    for (const auto& m : report.windows) {
        report.aggregate.mse += m.mse / nw;
        report.aggregate.mae += m.mae / nw;
        report.aggregate.shape_dtw += m.shape_dtw / nw;
        report.aggregate.temporal_dtw += m.temporal_dtw / nw;
    }
    return report;
}

double horizon_range_mse(const EvalReport& report, std::size_t from, std::size_t to) {
    if (from >= to || to > report.horizon_mse.size()) throw DomainError("horizon range out of bounds");
    double acc = 0.0;
    for (std::size_t h = from; h < to; ++h) acc += report.horizon_mse[h];
    return acc / static_cast<double>(to - from);
}

std::string horizon_csv(const EvalReport& report) {
    std::ostringstream os;
    os.precision(17);
    os << "horizon,mse,mae\n";
    for (std::size_t h = 0; h < report.horizon_mse.size(); ++h) {
        os << h + 1 << ',' << report.horizon_mse[h] << ',' << report.horizon_mae[h] << '\n';
    }
    return os.str();
}

std::string window_csv(const EvalReport& report) {
    std::ostringstream os;
    os.precision(17);
    os << "start,mse,mae,shape_dtw,temporal_dtw\n";
    for (const auto& m : report.windows) {
        os << m.start << ',' << m.mse << ',' << m.mae << ',' << m.shape_dtw << ',' << m.temporal_dtw << '\n';
    }
    return os.str();
}

std::string summary_text(const EvalReport& report) {
    std::ostringstream os;
    os.precision(17);
    os << "config_hash = " << report.config_hash << '\n';
    os << "windows = " << report.windows.size() << '\n';
    os << "channels = " << report.channels << '\n';
    os << "horizon = " << report.horizon_mse.size() << '\n';
    os << "mse = " << report.aggregate.mse << '\n';
    os << "mae = " << report.aggregate.mae << '\n';
    os << "shape_dtw = " << report.aggregate.shape_dtw << '\n';
    os << "temporal_dtw = " << report.aggregate.temporal_dtw << '\n';
    for (const auto& [k, v] : report.config) os << "config." << k << " = " << v << '\n';
    return os.str();
}

}  // namespace autocon
