#include "activeseg/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "activeseg/error.hpp"

namespace activeseg {

using json = nlohmann::json;

std::string f64le_hex(std::span<const double> values) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(values.size() * 16);
    for (double v : values) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int byte = 0; byte < 8; ++byte) {
            const auto b = static_cast<unsigned>((bits >> (8 * byte)) & 0xFF);
            out.push_back(digits[b >> 4]);
            out.push_back(digits[b & 0xF]);
        }
    }
    return out;
}

std::vector<double> f64le_unhex(const std::string& hex, const std::string& field) {
    if (hex.size() % 16 != 0) throw ParseError(field, "hex length is not a multiple of 16");
    auto nibble = [&](char c) -> std::uint64_t {
        if (c >= '0' && c <= '9') return static_cast<std::uint64_t>(c - '0');
        if (c >= 'a' && c <= 'f') return static_cast<std::uint64_t>(c - 'a' + 10);
        if (c >= 'A' && c <= 'F') return static_cast<std::uint64_t>(c - 'A' + 10);
        throw ParseError(field, "invalid hex digit");
    };
    std::vector<double> out(hex.size() / 16);
    for (std::size_t v = 0; v < out.size(); ++v) {
        std::uint64_t bits = 0;
        for (std::size_t byte = 0; byte < 8; ++byte) {
            const std::size_t at = v * 16 + byte * 2;
            bits |= ((nibble(hex[at]) << 4) | nibble(hex[at + 1])) << (8 * byte);
        }
        out[v] = std::bit_cast<double>(bits);
    }
    return out;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
    const double dropout = ckpt.params.dropout();
    const double feat[2] = {ckpt.features.shift, ckpt.features.scale};
    json j;
    j["format"] = "activeseg-checkpoint";
    j["version"] = checkpoint_version;
    j["layer_sizes"] = ckpt.params.sizes();
    j["dropout_f64le"] = f64le_hex({&dropout, 1});
    j["features"] = {{"box_scales", ckpt.features.box_scales},
                     {"include_raw", ckpt.features.include_raw},
                     {"include_z", ckpt.features.include_z},
                     {"shift_scale_f64le", f64le_hex(feat)}};
    j["parameters_f64le"] = f64le_hex(ckpt.params.flat());
    return j.dump(2) + "\n";
}

Checkpoint decode_checkpoint(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("checkpoint", e.what());
    }
    auto field = [&](const json& obj, const char* key) -> const json& {
        if (!obj.is_object() || !obj.contains(key)) throw ParseError(key, "missing");
        return obj.at(key);
    };
    try {
        if (field(j, "format").get<std::string>() != "activeseg-checkpoint") throw ParseError("format", "unknown format");
        if (field(j, "version").get<int>() != checkpoint_version) throw ParseError("version", "unsupported version");
        const auto sizes = field(j, "layer_sizes").get<std::vector<std::size_t>>();
        const auto dropout = f64le_unhex(field(j, "dropout_f64le").get<std::string>(), "dropout_f64le");
        if (dropout.size() != 1) throw ParseError("dropout_f64le", "expected one value");

        Checkpoint c;
        const json& f = field(j, "features");
        c.features.box_scales = field(f, "box_scales").get<std::vector<std::size_t>>();
        c.features.include_raw = field(f, "include_raw").get<bool>();
        c.features.include_z = field(f, "include_z").get<bool>();
        const auto ss = f64le_unhex(field(f, "shift_scale_f64le").get<std::string>(), "shift_scale_f64le");
        if (ss.size() != 2) throw ParseError("shift_scale_f64le", "expected two values");
        c.features.shift = ss[0];
        c.features.scale = ss[1];
        c.features.validate();

        c.params = MlpParams(sizes, dropout[0]);
        if (sizes.front() != c.features.width()) throw ParseError("layer_sizes", "input size does not match features");
        const auto values = f64le_unhex(field(j, "parameters_f64le").get<std::string>(), "parameters_f64le");
        if (values.size() != c.params.parameter_count())
            throw ParseError("parameters_f64le", "expected " + std::to_string(c.params.parameter_count()) + " values");
        std::copy(values.begin(), values.end(), c.params.flat().begin());
        return c;
    } catch (const json::exception& e) {
        throw ParseError("checkpoint", e.what());
    } catch (const InvalidArgument& e) {
        throw ParseError("checkpoint", e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << encode_checkpoint(ckpt);
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("file", "cannot open " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return decode_checkpoint(s.str());
}

} // namespace activeseg
