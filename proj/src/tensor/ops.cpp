#include "autocon/ops.hpp"

#include "autocon/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace autocon {
namespace {

struct SeqDims {
    std::size_t batch = 1;
    std::size_t length = 0;
    std::size_t channels = 0;
};

SeqDims seq_dims(const Shape& s, const char* op) {
    if (s.size() == 2) return {1, s[0], s[1]};
    if (s.size() == 3) return {s[0], s[1], s[2]};
    throw DimensionError(std::string(op) + ": expected [L x c] or [B x L x c], got " + shape_str(s));
}

Shape seq_shape(const Shape& like, std::size_t length, std::size_t channels) {
    if (like.size() == 2) return {length, channels};
    return {like[0], length, channels};
}

void require_same_shape(const Value& a, const Value& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    }
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

Value matmul(const Value& a, const Value& b) {
    const auto& sa = a.shape();
    const auto& sb = b.shape();
    const auto mismatch = [&] {
        return DimensionError("matmul: incompatible shapes " + shape_str(sa) + " and " + shape_str(sb));
    };
    if (sa.size() < 2 || sa.size() > 3 || sb.size() < 2 || sb.size() > 3) throw mismatch();

    const bool a_batched = sa.size() == 3;
    const bool b_batched = sb.size() == 3;
    const std::size_t m = sa[sa.size() - 2], k = sa.back();
    const std::size_t kb = sb[sb.size() - 2], n = sb.back();
    if (k != kb) throw mismatch();
    std::size_t batch = 1;
    if (a_batched && b_batched) {
        if (sa[0] != sb[0]) throw mismatch();
        batch = sa[0];
    } else if (a_batched) {
        batch = sa[0];
    } else if (b_batched) {
        batch = sb[0];
    }
    const std::size_t a_stride = a_batched ? m * k : 0;
    const std::size_t b_stride = b_batched ? k * n : 0;

    const auto ad = a.data();
    const auto bd = b.data();
    std::vector<double> out(batch * m * n, 0.0);
    for (std::size_t bi = 0; bi < batch; ++bi) {
        const double* A = ad.data() + bi * a_stride;
        const double* B = bd.data() + bi * b_stride;
        double* C = out.data() + bi * m * n;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t p = 0; p < k; ++p) {
                const double av = A[i * k + p];
                if (av == 0.0) continue;
                for (std::size_t j = 0; j < n; ++j) C[i * n + j] += av * B[p * n + j];
            }
        }
    }

    Shape shape = (a_batched || b_batched) ? Shape{batch, m, n} : Shape{m, n};
    const auto ida = a.id(), idb = b.id();
    return a.tape().record(std::move(shape), std::move(out), {a, b}, [=](Tape& t, std::size_t self) {
        const auto g = t.grad(self);
        const auto A = t.data(ida);
        const auto B = t.data(idb);
        if (t.requires_grad(ida)) {
            auto dA = t.grad_mut(ida);
            for (std::size_t bi = 0; bi < batch; ++bi) {
                const double* G = g.data() + bi * m * n;
                const double* Bm = B.data() + bi * b_stride;
                double* dAm = dA.data() + bi * a_stride;
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        double acc = 0.0;
                        for (std::size_t j = 0; j < n; ++j) acc += G[i * n + j] * Bm[p * n + j];
                        dAm[i * k + p] += acc;
                    }
            }
        }
        if (t.requires_grad(idb)) {
            auto dB = t.grad_mut(idb);
            for (std::size_t bi = 0; bi < batch; ++bi) {
                const double* G = g.data() + bi * m * n;
                const double* Am = A.data() + bi * a_stride;
                double* dBm = dB.data() + bi * b_stride;
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        const double av = Am[i * k + p];
                        if (av == 0.0) continue;
                        for (std::size_t j = 0; j < n; ++j) dBm[p * n + j] += av * G[i * n + j];
                    }
            }
        }
    });
}

Value transpose(const Value& a) {
    const auto& s = a.shape();
    if (s.size() != 2 && s.size() != 3) throw DimensionError("transpose: expected rank 2 or 3, got " + shape_str(s));
    const std::size_t batch = s.size() == 3 ? s[0] : 1;
    const std::size_t r = s[s.size() - 2], c = s.back();
    const auto d = a.data();
    std::vector<double> out(d.size());
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) out[b * r * c + j * r + i] = d[b * r * c + i * c + j];
    Shape shape = s.size() == 3 ? Shape{batch, c, r} : Shape{c, r};
    const auto id = a.id();
    return a.tape().record(std::move(shape), std::move(out), {a}, [=](Tape& t, std::size_t self) {
        const auto g = t.grad(self);
        auto dx = t.grad_mut(id);
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) dx[b * r * c + i * c + j] += g[b * r * c + j * r + i];
    });
}

Value add(const Value& a, const Value& b) {
    require_same_shape(a, b, "add");
    const auto ad = a.data(), bd = b.data();
    std::vector<double> out(ad.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] + bd[i];
    const auto ida = a.id(), idb = b.id();
    return a.tape().record(a.shape(), std::move(out), {a, b}, [=](Tape& t, std::size_t self) {
        const auto g = t.grad(self);
        for (const auto id : {ida, idb}) {
            if (!t.requires_grad(id)) continue;
            auto dx = t.grad_mut(id);
            for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
        }
    });
}

Value sub(const Value& a, const Value& b) {
    require_same_shape(a, b, "sub");
    const auto ad = a.data(), bd = b.data();
    std::vector<double> out(ad.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] - bd[i];
    const auto ida = a.id(), idb = b.id();
    return a.tape().record(a.shape(), std::move(out), {a, b}, [=](Tape& t, std::size_t self) {
        const auto g = t.grad(self);
        if (t.requires_grad(ida)) {
            auto dx = t.grad_mut(ida);
            for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
        }
        if (t.requires_grad(idb)) {
            auto dx = t.grad_mut(idb);
            for (std::size_t i = 0; i < g.size(); ++i) dx[i] -= g[i];
        }
    });
}

Value mul(const Value& a, const Value& b) {
    require_same_shape(a, b, "mul");
    const auto ad = a.data(), bd = b.data();
    std::vector<double> out(ad.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] * bd[i];
    const auto ida = a.id(), idb = b.id();
    return a.tape().record(a.shape(), std::move(out), {a, b}, [=](Tape& t, std::size_t self) {
        const auto g = t.grad(self);
        const auto A = t.data(ida), B = t.data(idb);
        if (t.requires_grad(ida)) {
            auto dx = t.grad_mut(ida);
            for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * B[i];
        }
        if (t.requires_grad(idb)) {
            auto dx = t.grad_mut(idb);
            for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * A[i];
        }
    });
}

Value scale(const Value& a, double s) {
    const auto ad = a.data();
    std::vector<double> out(ad.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] * s;
    const auto id = a.id();
    return a.tape().record(a.shape(), std::move(out), {a}, [=](Tape& t, std::size_t self) {
        const auto g = t.grad(self);
        auto dx = t.grad_mut(id);
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * s;
    });
}

Value add_bias(const Value& x, const Value& bias) {
    const auto& sx = x.shape();
    const auto& sb = bias.shape();
    if (sx.empty() || sb.size() != 1 || sb[0] != sx.back()) {
        throw DimensionError("add_bias: bias " + shape_str(sb) + " does not match last axis of " + shape_str(sx));
    }
    const std::size_t n = sb[0];
    const auto xd = x.data(), bd = bias.data();
    std::vector<double> out(xd.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = xd[i] + bd[i % n];
    const auto idx = x.id(), idb = bias.id();
    return x.tape().record(sx, std::move(out), {x, bias}, [=](Tape& t, std::size_t self) {
        const auto g = t.grad(self);
        if (t.requires_grad(idx)) {
            auto dx = t.grad_mut(idx);
            for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
        }
        if (t.requires_grad(idb)) {
            auto db = t.grad_mut(idb);
            for (std::size_t i = 0; i < g.size(); ++i) db[i % n] += g[i];
        }
    });
}

Value gelu(const Value& x) {
    const auto xd = x.data();
    std::vector<double> out(xd.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = xd[i] * normal_cdf(xd[i]);
    const auto id = x.id();
    return x.tape().record(x.shape(), std::move(out), {x}, [=](Tape& t, std::size_t self) {
        const auto g = t.grad(self);
        const auto X = t.data(id);
        auto dx = t.grad_mut(id);
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * (normal_cdf(X[i]) + X[i] * normal_pdf(X[i]));
    });
}

Value conv1d_causal(const Value& x, const Value& kernel, int dilation) {
    if (dilation < 1) throw ParameterError("conv1d_causal: dilation must be >= 1, got " + std::to_string(dilation));
    const auto dims = seq_dims(x.shape(), "conv1d_causal");
    const auto& sk = kernel.shape();
    if (sk.size() != 3 || sk[1] != dims.channels) {
        throw DimensionError("conv1d_causal: kernel " + shape_str(sk) + " incompatible with input " +
                             shape_str(x.shape()));
    }
    const std::size_t taps = sk[0], cin = sk[1], cout = sk[2];
    const std::size_t L = dims.length, B = dims.batch;
    const auto dil = static_cast<std::size_t>(dilation);

    const auto X = x.data();
    const auto K = kernel.data();
    std::vector<double> out(B * L * cout, 0.0);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < L; ++t) {
            double* y = out.data() + (b * L + t) * cout;
            for (std::size_t j = 0; j < taps; ++j) {
                const std::size_t back = (taps - 1 - j) * dil;
                if (back > t) continue;
                const double* xs = X.data() + (b * L + t - back) * cin;
                const double* kj = K.data() + j * cin * cout;
                for (std::size_t ci = 0; ci < cin; ++ci) {
                    const double xv = xs[ci];
                    const double* kr = kj + ci * cout;
                    for (std::size_t co = 0; co < cout; ++co) y[co] += xv * kr[co];
                }
            }
        }

    const auto idx = x.id(), idk = kernel.id();
    return x.tape().record(seq_shape(x.shape(), L, cout), std::move(out), {x, kernel},
                           [=](Tape& tp, std::size_t self) {
                               const auto G = tp.grad(self);
                               const auto Xd = tp.data(idx);
                               const auto Kd = tp.data(idk);
                               const bool need_x = tp.requires_grad(idx);
                               const bool need_k = tp.requires_grad(idk);
                               std::span<double> dX, dK;
                               if (need_x) dX = tp.grad_mut(idx);
                               if (need_k) dK = tp.grad_mut(idk);
                               for (std::size_t b = 0; b < B; ++b)
                                   for (std::size_t t = 0; t < L; ++t) {
                                       const double* g = G.data() + (b * L + t) * cout;
                                       for (std::size_t j = 0; j < taps; ++j) {
                                           const std::size_t back = (taps - 1 - j) * dil;
                                           if (back > t) continue;
                                           const std::size_t src = (b * L + t - back) * cin;
                                           for (std::size_t ci = 0; ci < cin; ++ci) {
                                               const std::size_t kr = (j * cin + ci) * cout;
                                               if (need_x) {
                                                   double acc = 0.0;
                                                   for (std::size_t co = 0; co < cout; ++co) acc += g[co] * Kd[kr + co];
                                                   dX[src + ci] += acc;
                                               }
                                               if (need_k) {
                                                   const double xv = Xd[src + ci];
                                                   for (std::size_t co = 0; co < cout; ++co) dK[kr + co] += xv * g[co];
                                               }
                                           }
                                       }
                                   }
                           });
}

Value replicate_pad(const Value& x, int left, int right) {
    if (left < 0 || right < 0) throw ParameterError("replicate_pad: padding must be non-negative");
    const auto dims = seq_dims(x.shape(), "replicate_pad");
    if (dims.length == 0) throw DomainError("replicate_pad: empty input");
    const std::size_t L = dims.length, C = dims.channels, B = dims.batch;
    const auto lp = static_cast<std::size_t>(left);
    const std::size_t out_len = L + lp + static_cast<std::size_t>(right);
    const auto X = x.data();

    // Source row of each padded position.
    const auto source = [=](std::size_t t) -> std::size_t {
        if (t < lp) return 0;
        if (t - lp >= L) return L - 1;
        return t - lp;
    };
    std::vector<double> out(B * out_len * C);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < out_len; ++t)
            for (std::size_t c = 0; c < C; ++c) out[(b * out_len + t) * C + c] = X[(b * L + source(t)) * C + c];

    const auto id = x.id();
    return x.tape().record(seq_shape(x.shape(), out_len, C), std::move(out), {x}, [=](Tape& tp, std::size_t self) {
        const auto G = tp.grad(self);
        auto dX = tp.grad_mut(id);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t t = 0; t < out_len; ++t)
                for (std::size_t c = 0; c < C; ++c) dX[(b * L + source(t)) * C + c] += G[(b * out_len + t) * C + c];
    });
}

Value avgpool1d(const Value& x, int k) {
    const auto dims = seq_dims(x.shape(), "avgpool1d");
    if (k < 1) throw ParameterError("avgpool1d: kernel must be >= 1, got " + std::to_string(k));
    const auto ks = static_cast<std::size_t>(k);
    if (ks > dims.length) {
        throw ParameterError("avgpool1d: kernel " + std::to_string(k) + " exceeds length " + std::to_string(dims.length));
    }
    const std::size_t L = dims.length, C = dims.channels, B = dims.batch;
    const std::size_t out_len = L - ks + 1;
    const double inv = 1.0 / static_cast<double>(ks);
    const auto X = x.data();
    std::vector<double> out(B * out_len * C, 0.0);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < out_len; ++t) {
            double* y = out.data() + (b * out_len + t) * C;
            for (std::size_t i = 0; i < ks; ++i) {
                const double* xs = X.data() + (b * L + t + i) * C;
                for (std::size_t c = 0; c < C; ++c) y[c] += xs[c];
            }
            for (std::size_t c = 0; c < C; ++c) y[c] *= inv;
        }

    const auto id = x.id();
    return x.tape().record(seq_shape(x.shape(), out_len, C), std::move(out), {x}, [=](Tape& tp, std::size_t self) {
        const auto G = tp.grad(self);
        auto dX = tp.grad_mut(id);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t t = 0; t < out_len; ++t) {
                const double* g = G.data() + (b * out_len + t) * C;
                for (std::size_t i = 0; i < ks; ++i) {
                    double* dx = dX.data() + (b * L + t + i) * C;
                    for (std::size_t c = 0; c < C; ++c) dx[c] += g[c] * inv;
                }
            }
    });
}

Value max_pool_time(const Value& v) {
    const auto dims = seq_dims(v.shape(), "max_pool_time");
    if (dims.length == 0) throw DomainError("max_pool_time: empty time axis");
    const std::size_t L = dims.length, C = dims.channels, B = dims.batch;
    const auto X = v.data();
    std::vector<double> out(B * C);
    std::vector<std::size_t> argmax(B * C);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t c = 0; c < C; ++c) {
            std::size_t best = 0;
            double bv = X[(b * L) * C + c];
            for (std::size_t t = 1; t < L; ++t) {
                const double cand = X[(b * L + t) * C + c];
                if (cand > bv) {
                    bv = cand;
                    best = t;
                }
            }
            out[b * C + c] = bv;
            argmax[b * C + c] = (b * L + best) * C + c;
        }
    Shape shape = v.shape().size() == 2 ? Shape{C} : Shape{B, C};
    const auto id = v.id();
    return v.tape().record(std::move(shape), std::move(out), {v},
                           [id, argmax = std::move(argmax)](Tape& tp, std::size_t self) {
                               const auto G = tp.grad(self);
                               auto dX = tp.grad_mut(id);
                               for (std::size_t i = 0; i < G.size(); ++i) dX[argmax[i]] += G[i];
                           });
}

Value l2_normalize(const Value& x) {
    const auto& s = x.shape();
    if (s.empty()) throw DimensionError("l2_normalize: scalar input");
    const std::size_t n = s.back();
    const std::size_t rows = n == 0 ? 0 : x.data().size() / n;
    const auto X = x.data();
    std::vector<double> out(X.size());
    std::vector<double> norms(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        double ss = 0.0;
        for (std::size_t j = 0; j < n; ++j) ss += X[r * n + j] * X[r * n + j];
        norms[r] = std::sqrt(ss);
        const double denom = norms[r] + kNormEpsilon;
        for (std::size_t j = 0; j < n; ++j) out[r * n + j] = X[r * n + j] / denom;
    }
    const auto id = x.id();
    return x.tape().record(s, std::move(out), {x}, [=, norms = std::move(norms)](Tape& tp, std::size_t self) {
        const auto G = tp.grad(self);
        const auto Xd = tp.data(id);
        auto dX = tp.grad_mut(id);
        // y = x / (|x| + eps);  dy/dx = I/(|x|+eps) - x x^T / (|x| (|x|+eps)^2)
        for (std::size_t r = 0; r < rows; ++r) {
            const double nrm = norms[r];
            const double denom = nrm + kNormEpsilon;
            double gx = 0.0;
            for (std::size_t j = 0; j < n; ++j) gx += G[r * n + j] * Xd[r * n + j];
            const double coef = nrm > 0.0 ? gx / (nrm * denom * denom) : 0.0;
            for (std::size_t j = 0; j < n; ++j) dX[r * n + j] += G[r * n + j] / denom - coef * Xd[r * n + j];
        }
    });
}

Value cosine_sim(const Value& a, const Value& b) {
    if (a.shape().size() != 1 || a.shape() != b.shape()) {
        throw DimensionError("cosine_sim: expected two equal [d] vectors, got " + shape_str(a.shape()) + " and " +
                             shape_str(b.shape()));
    }
    const std::size_t d = a.shape()[0];
    const auto na = reshape(l2_normalize(a), {1, d});
    const auto nb = reshape(l2_normalize(b), {d, 1});
    return reshape(matmul(na, nb), {1});
}

Value cosine_sim_matrix(const Value& rows) {
    if (rows.shape().size() != 2) throw DimensionError("cosine_sim_matrix: expected [N x d], got " + shape_str(rows.shape()));
    const auto n = l2_normalize(rows);
    return matmul(n, transpose(n));
}

Value reshape(const Value& x, Shape shape) {
    if (numel(shape) != x.data().size()) {
        throw DimensionError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
    }
    const auto d = x.data();
    const auto id = x.id();
    return x.tape().record(std::move(shape), std::vector<double>(d.begin(), d.end()), {x},
                           [=](Tape& tp, std::size_t self) {
                               const auto G = tp.grad(self);
                               auto dX = tp.grad_mut(id);
                               for (std::size_t i = 0; i < G.size(); ++i) dX[i] += G[i];
                           });
}

Value select_rows(const Value& x, const std::vector<std::size_t>& rows) {
    const auto& s = x.shape();
    if (s.empty()) throw DimensionError("select_rows: scalar input");
    const std::size_t stride = numel(s) / s[0];
    for (const auto r : rows) {
        if (r >= s[0]) throw DimensionError("select_rows: row " + std::to_string(r) + " out of " + shape_str(s));
    }
    const auto X = x.data();
    std::vector<double> out;
    out.reserve(rows.size() * stride);
    for (const auto r : rows) out.insert(out.end(), X.begin() + r * stride, X.begin() + (r + 1) * stride);
    Shape shape = s;
    shape[0] = rows.size();
    const auto id = x.id();
    return x.tape().record(std::move(shape), std::move(out), {x}, [=](Tape& tp, std::size_t self) {
        const auto G = tp.grad(self);
        auto dX = tp.grad_mut(id);
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < stride; ++j) dX[rows[i] * stride + j] += G[i * stride + j];
    });
}

Value concat_last(const Value& a, const Value& b) {
    const auto& sa = a.shape();
    const auto& sb = b.shape();
    if (sa.empty() || sa.size() != sb.size() || !std::equal(sa.begin(), sa.end() - 1, sb.begin())) {
        throw DimensionError("concat_last: incompatible shapes " + shape_str(sa) + " and " + shape_str(sb));
    }
    const std::size_t na = sa.back(), nb = sb.back(), nc = na + nb;
    const std::size_t rows = numel(sa) / (na == 0 ? 1 : na);
    const auto A = a.data(), B = b.data();
    std::vector<double> out(rows * nc);
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(A.begin() + r * na, na, out.begin() + r * nc);
        std::copy_n(B.begin() + r * nb, nb, out.begin() + r * nc + na);
    }
    Shape shape = sa;
    shape.back() = nc;
    const auto ida = a.id(), idb = b.id();
    return a.tape().record(std::move(shape), std::move(out), {a, b}, [=](Tape& tp, std::size_t self) {
        const auto G = tp.grad(self);
        if (tp.requires_grad(ida)) {
            auto dA = tp.grad_mut(ida);
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t j = 0; j < na; ++j) dA[r * na + j] += G[r * nc + j];
        }
        if (tp.requires_grad(idb)) {
            auto dB = tp.grad_mut(idb);
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t j = 0; j < nb; ++j) dB[r * nb + j] += G[r * nc + na + j];
        }
    });
}

Value sum(const Value& x) {
    double total = 0.0;
    for (const double v : x.data()) total += v;
    const auto id = x.id();
    return x.tape().record({1}, {total}, {x}, [=](Tape& tp, std::size_t self) {
        const double g = tp.grad(self)[0];
        for (auto& d : tp.grad_mut(id)) d += g;
    });
}

Value mean(const Value& x) {
    const std::size_t n = x.data().size();
    if (n == 0) throw DomainError("mean: empty value");
    return scale(sum(x), 1.0 / static_cast<double>(n));
}

Value mse_loss(const Value& pred, const Value& target) {
    require_same_shape(pred, target, "mse_loss");
    const auto P = pred.data(), Y = target.data();
    const std::size_t n = P.size();
    if (n == 0) throw DomainError("mse_loss: empty value");
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += (P[i] - Y[i]) * (P[i] - Y[i]);
    const double inv = 1.0 / static_cast<double>(n);
    const auto idp = pred.id(), idy = target.id();
    return pred.tape().record({1}, {acc * inv}, {pred, target}, [=](Tape& tp, std::size_t self) {
        const double g = tp.grad(self)[0];
        const auto Pd = tp.data(idp), Yd = tp.data(idy);
        if (tp.requires_grad(idp)) {
            auto dP = tp.grad_mut(idp);
            for (std::size_t i = 0; i < n; ++i) dP[i] += g * 2.0 * inv * (Pd[i] - Yd[i]);
        }
        if (tp.requires_grad(idy)) {
            auto dY = tp.grad_mut(idy);
            for (std::size_t i = 0; i < n; ++i) dY[i] -= g * 2.0 * inv * (Pd[i] - Yd[i]);
        }
    });
}

}  // namespace autocon
