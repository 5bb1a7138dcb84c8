#include "autocon/errors.hpp"
#include "autocon/io.hpp"
#include "autocon/model.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace autocon {
namespace {

constexpr const char* kMagic = "autocon-checkpoint";
constexpr int kVersion = 1;

std::string join_kernels(const std::vector<int>& ks) {
    std::string out;
    for (std::size_t i = 0; i < ks.size(); ++i) out += (i ? "," : "") + std::to_string(ks[i]);
    return out;
}

std::vector<int> parse_kernels(const std::string& text) {
    std::vector<int> out;
    std::istringstream is(text);
    std::string item;
    while (std::getline(is, item, ',')) out.push_back(std::stoi(item));
    return out;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
    const auto& cfg = checkpoint.params.config;
    std::ostringstream os;
    os << kMagic << ' ' << kVersion << '\n';
    os << "config_hash " << checkpoint.config_hash << '\n';
    os << "rng " << checkpoint.rng_state << '\n';
    for (const auto& [k, v] : checkpoint.config) os << "config " << k << " = " << v << '\n';
    os << "model input " << cfg.input << '\n'
       << "model output " << cfg.output << '\n'
       << "model features " << cfg.features << '\n'
       << "model width " << cfg.width << '\n'
       << "model depth " << cfg.depth << '\n'
       << "model conv_kernel " << cfg.conv_kernel << '\n'
       << "model ma_kernels " << join_kernels(cfg.ma_kernels) << '\n'
       << "model use_short " << cfg.use_short << '\n'
       << "model use_long " << cfg.use_long << '\n';
    os << std::hexfloat;
    for (const auto* p : checkpoint.params.list()) {
        os << "param " << p->name << ' ' << p->value.rank();
        for (const auto d : p->value.shape) os << ' ' << d;
        os << '\n';
        for (std::size_t i = 0; i < p->value.size(); ++i) os << (i ? " " : "") << p->value.data[i];
        os << '\n';
    }
    os << "end\n";
    write_text_atomic(path, os.str());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != std::string(kMagic) + ' ' + std::to_string(kVersion)) {
        throw DataError(path.string() + ": not a version " + std::to_string(kVersion) + " checkpoint");
    }

    Checkpoint ck;
    std::map<std::string, std::string> model;
    std::map<std::string, Tensor> tensors;
    bool ended = false;
    while (std::getline(in, line)) {
        if (line == "end") {
            ended = true;
            break;
        }
        const auto sp = line.find(' ');
        const std::string tag = line.substr(0, sp);
        const std::string rest = sp == std::string::npos ? "" : line.substr(sp + 1);
        if (tag == "config_hash") {
            ck.config_hash = rest;
        } else if (tag == "rng") {
            ck.rng_state = rest;
        } else if (tag == "config") {
            const auto eq = rest.find(" = ");
            if (eq == std::string::npos) throw DataError(path.string() + ": malformed config line");
            ck.config.emplace_back(rest.substr(0, eq), rest.substr(eq + 3));
        } else if (tag == "model") {
            const auto s2 = rest.find(' ');
            model[rest.substr(0, s2)] = s2 == std::string::npos ? "" : rest.substr(s2 + 1);
        } else if (tag == "param") {
            std::istringstream hs(rest);
            std::string name;
            std::size_t rank = 0;
            hs >> name >> rank;
            Shape shape(rank);
            for (auto& d : shape) hs >> d;
            if (!hs) throw DataError(path.string() + ": malformed param header '" + line + "'");
            std::string values;
            if (!std::getline(in, values)) throw DataError(path.string() + ": truncated param '" + name + "'");
            std::vector<double> data;
            data.reserve(numel(shape));
            const char* cur = values.c_str();
            char* endp = nullptr;
            while (true) {
                const double v = std::strtod(cur, &endp);
                if (endp == cur) break;
                data.push_back(v);
                cur = endp;
            }
            if (data.size() != numel(shape)) throw DataError(path.string() + ": param '" + name + "' size mismatch");
            tensors.emplace(name, Tensor(std::move(shape), std::move(data)));
        } else {
            throw DataError(path.string() + ": unknown record '" + tag + "'");
        }
    }
    if (!ended) throw DataError(path.string() + ": missing end marker");

    const auto get = [&](const char* key) -> const std::string& {
        const auto it = model.find(key);
        if (it == model.end()) throw DataError(path.string() + ": missing model field '" + key + "'");
        return it->second;
    };
    ModelConfig cfg;
    cfg.input = std::stoull(get("input"));
    cfg.output = std::stoull(get("output"));
    cfg.features = std::stoull(get("features"));
    cfg.width = std::stoull(get("width"));
    cfg.depth = std::stoull(get("depth"));
    cfg.conv_kernel = std::stoi(get("conv_kernel"));
    cfg.ma_kernels = parse_kernels(get("ma_kernels"));
    cfg.use_short = get("use_short") == "1";
    cfg.use_long = get("use_long") == "1";

    ck.params = ModelParams::zeros(cfg);
    for (auto* p : ck.params.list()) {
        const auto it = tensors.find(p->name);
        if (it == tensors.end()) throw DataError(path.string() + ": missing param '" + p->name + "'");
        if (it->second.shape != p->value.shape) {
            throw DimensionError(path.string() + ": param '" + p->name + "' has shape " + shape_str(it->second.shape) +
                                 ", expected " + shape_str(p->value.shape));
        }
        p->value = it->second;
        p->zero_grad();
    }
    return ck;
}

}  // namespace autocon
