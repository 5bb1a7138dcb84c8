#include "autocon/autocorr.hpp"

#include "autocon/errors.hpp"
#include "autocon/io.hpp"

#include <fftw3.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <cmath>
#include <complex>
#include <sstream>
#include <memory>

namespace autocon {
namespace {

std::atomic<std::size_t> g_acf_computations{0};

std::vector<double> centered(std::span<const double> x) {
    double m = 0.0;
    for (const double v : x) m += v;
    m /= static_cast<double>(x.size());
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - m;
    return out;
}

std::vector<double> acf_direct(const std::vector<double>& y, std::size_t max_lag) {
    const std::size_t T = y.size();
    std::vector<double> out(max_lag + 1, 0.0);
    for (std::size_t h = 0; h <= max_lag; ++h) {
        double acc = 0.0;
        for (std::size_t t = h; t < T; ++t) acc += y[t] * y[t - h];
        out[h] = acc;
    }
    return out;
}

struct FftwDeleter {
    void operator()(void* p) const { fftw_free(p); }
};
struct PlanDeleter {
    void operator()(fftw_plan p) const { fftw_destroy_plan(p); }
};
using PlanPtr = std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanDeleter>;

std::vector<double> acf_fft(const std::vector<double>& y, std::size_t max_lag) {
    const std::size_t T = y.size();
    // Zero padding to >= 2T turns the circular correlation into a linear one.
    std::size_t n = 1;
    while (n < 2 * T) n <<= 1;
    const std::size_t bins = n / 2 + 1;

    std::unique_ptr<double, FftwDeleter> real(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
    std::unique_ptr<fftw_complex, FftwDeleter> spec(
        static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins)));
    PlanPtr forward(fftw_plan_dft_r2c_1d(static_cast<int>(n), real.get(), spec.get(), FFTW_ESTIMATE));
    PlanPtr inverse(fftw_plan_dft_c2r_1d(static_cast<int>(n), spec.get(), real.get(), FFTW_ESTIMATE));

    std::fill(real.get(), real.get() + n, 0.0);
    std::copy(y.begin(), y.end(), real.get());
    fftw_execute(forward.get());
    for (std::size_t k = 0; k < bins; ++k) {
        const double re = spec.get()[k][0], im = spec.get()[k][1];
        spec.get()[k][0] = re * re + im * im;
        spec.get()[k][1] = 0.0;
    }
    fftw_execute(inverse.get());

    std::vector<double> out(max_lag + 1);
    for (std::size_t h = 0; h <= max_lag; ++h) out[h] = real.get()[h] / static_cast<double>(n);
    return out;
}

}  // namespace

std::vector<double> moving_average(std::span<const double> x, int k) {
    if (k < 1 || k % 2 == 0) throw ParameterError("smoothing kernel must be odd and >= 1, got " + std::to_string(k));
    if (x.empty()) throw DomainError("cannot smooth an empty series");
    if (static_cast<std::size_t>(k) > x.size()) {
        throw ParameterError("smoothing kernel " + std::to_string(k) + " exceeds series length " + std::to_string(x.size()));
    }
    const auto half = static_cast<std::ptrdiff_t>(k / 2);
    const auto T = static_cast<std::ptrdiff_t>(x.size());
    std::vector<double> out(x.size());
    for (std::ptrdiff_t t = 0; t < T; ++t) {
        double acc = 0.0;
        for (std::ptrdiff_t i = t - half; i <= t + half; ++i) acc += x[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, T - 1))];
        out[static_cast<std::size_t>(t)] = acc / static_cast<double>(k);
    }
    return out;
}

Series smooth(const Series& series, int k) {
    Series out = series;
    const std::size_t c = series.channels();
    for (std::size_t ch = 0; ch < c; ++ch) {
        const auto col = moving_average(series.channel(ch), k);
        for (std::size_t t = 0; t < col.size(); ++t) out.values.data[t * c + ch] = col[t];
    }
    return out;
}

int default_smoothing_k(Frequency freq) {
    switch (freq) {
        case Frequency::min10: return 145;
        case Frequency::min15: return 97;
        case Frequency::hourly: return 25;
        case Frequency::daily: return 7;
        case Frequency::weekly: return 5;
        case Frequency::none: return 25;
    }
    return 25;
}

std::vector<double> sample_acf(std::span<const double> x, std::size_t max_lag, AcfMethod method) {
    if (x.size() <= max_lag) {
        throw DomainError("acf up to lag " + std::to_string(max_lag) + " needs at least " + std::to_string(max_lag + 1) +
                          " points, got " + std::to_string(x.size()));
    }
    const auto y = centered(x);
    auto raw = method == AcfMethod::direct ? acf_direct(y, max_lag) : acf_fft(y, max_lag);
    double var = 0.0;
    for (const double v : y) var += v * v;
    if (!(var > 0.0)) throw DomainError("acf undefined: zero variance");
    for (auto& r : raw) r /= var;
    raw[0] = 1.0;
    return raw;
}

std::size_t strongest_lag(std::span<const double> acf) {
    if (acf.size() < 2) throw DomainError("strongest_lag needs at least lag 1");
    std::size_t from = 1;
    while (from < acf.size() && acf[from] > 0.0) ++from;
    if (from == acf.size()) from = 1;
    std::size_t best = from;
    for (std::size_t h = from; h < acf.size(); ++h)
        if (std::abs(acf[h]) > std::abs(acf[best])) best = h;
    return best;
}

AcfTable global_acf(const Series& train, std::size_t max_lag, int smoothing_k, AcfMethod method) {
    ++g_acf_computations;
    const auto smoothed = smooth(train, smoothing_k);
    AcfTable table;
    table.max_lag = max_lag;
    table.smoothing_k = smoothing_k;
    for (std::size_t ch = 0; ch < train.channels(); ++ch) {
        try {
            table.values.push_back(sample_acf(smoothed.channel(ch), max_lag, method));
        } catch (const DomainError& e) {
            const std::string name = ch < train.channel_names.size() ? train.channel_names[ch] : std::to_string(ch);
            throw DomainError("channel '" + name + "': " + e.what());
        }
    }
    return table;
}

std::size_t acf_compute_count() { return g_acf_computations.load(); }

double relation(const AcfTable& acf, std::size_t t1, std::size_t t2, std::size_t ch) {
    const std::size_t lag = t1 > t2 ? t1 - t2 : t2 - t1;
    if (lag > acf.max_lag) {
        spdlog::warn("relation lag {} exceeds acf max lag {}; using r=0", lag, acf.max_lag);
        return 0.0;
    }
    return std::abs(acf.at(ch, lag));
}

Tensor relation_matrix(const AcfTable& acf, std::span<const std::size_t> starts, std::size_t ch) {
    const std::size_t n = starts.size();
    Tensor r({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        r.data[i * n + i] = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = relation(acf, starts[i], starts[j], ch);
            r.data[i * n + j] = v;
            r.data[j * n + i] = v;
        }
    }
    return r;
}

std::string acf_csv(const AcfTable& acf, std::span<const std::string> channel_names) {
    std::ostringstream out;
    out.precision(17);
    out << "lag,channel,acf\n";
    for (std::size_t h = 0; h <= acf.max_lag; ++h)
        for (std::size_t ch = 0; ch < acf.channels(); ++ch) {
            const std::string name = ch < channel_names.size() ? channel_names[ch] : std::to_string(ch);
            out << h << ',' << name << ',' << acf.values[ch][h] << '\n';
        }
    return out.str();
}

void write_acf_csv(const std::filesystem::path& path, const AcfTable& acf, std::span<const std::string> channel_names) {
    write_text_atomic(path, acf_csv(acf, channel_names));
}

}  // namespace autocon
