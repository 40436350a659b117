#include "activeseg/mhd.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace activeseg {

namespace fs = std::filesystem;

const char* element_type_name(ElementType t) noexcept {
    switch (t) {
    case ElementType::uchar: return "MET_UCHAR";
    case ElementType::float32: return "MET_FLOAT";
    case ElementType::float64: return "MET_DOUBLE";
    }
    return "MET_UNKNOWN";
}

namespace {

std::size_t element_size(ElementType t) {
    switch (t) {
    case ElementType::uchar: return 1;
    case ElementType::float32: return 4;
    case ElementType::float64: return 8;
    }
    return 0;
}

std::string format_real(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string header_text(const Dims& d, const Spacing& s, ElementType t) {
    std::ostringstream h;
    h << "ObjectType = Image\n"
      << "NDims = 3\n"
      << "BinaryData = True\n"
      << "BinaryDataByteOrderMSB = False\n"
      << "DimSize = " << d.nx << ' ' << d.ny << ' ' << d.nz << '\n'
      << "ElementSpacing = " << format_real(s.dx) << ' ' << format_real(s.dy) << ' ' << format_real(s.dz) << '\n'
      << "ElementType = " << element_type_name(t) << '\n'
      << "ElementDataFile = LOCAL\n";
    return h.str();
}

template <typename Word>
void store_le(Word w, char* out) {
    if constexpr (std::endian::native == std::endian::big) {
        for (std::size_t b = 0; b < sizeof(Word); ++b) out[b] = static_cast<char>((w >> (8 * b)) & 0xFF);
    } else {
        std::memcpy(out, &w, sizeof(Word));
    }
}

template <typename Word>
Word load_le(const char* in) {
    Word w{};
    if constexpr (std::endian::native == std::endian::big) {
        for (std::size_t b = 0; b < sizeof(Word); ++b)
            w |= static_cast<Word>(static_cast<unsigned char>(in[b])) << (8 * b);
    } else {
        std::memcpy(&w, in, sizeof(Word));
    }
    return w;
}

void write_file(const fs::path& path, const std::string& header, const std::string& payload) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

struct RawImage {
    Dims dims;
    Spacing spacing;
    ElementType type;
    std::string payload;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
std::vector<T> parse_list(const std::string& field, const std::string& value, std::size_t count) {
    std::istringstream in(value);
    std::vector<T> out;
    T x;
    while (in >> x) out.push_back(x);
    if (!in.eof() || out.size() != count)
        throw ParseError(field, "expected " + std::to_string(count) + " values, got '" + value + "'");
    return out;
}

RawImage read_raw(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("file", "cannot open " + path.string());

    std::map<std::string, std::string> header;
    std::string line;
    bool saw_data_file = false;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (trim(line).empty()) continue;
            throw ParseError("header", "malformed line '" + line + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        header[key] = trim(line.substr(eq + 1));
        if (key == "ElementDataFile") {
            saw_data_file = true;
            break;
        }
    }
    if (!saw_data_file) throw ParseError("ElementDataFile", "missing");

    auto require = [&](const char* key) -> const std::string& {
        const auto it = header.find(key);
        if (it == header.end()) throw ParseError(key, "missing");
        return it->second;
    };

    if (const auto it = header.find("ObjectType"); it != header.end() && it->second != "Image")
        throw ParseError("ObjectType", "unsupported value '" + it->second + "'");
    if (require("NDims") != "3") throw ParseError("NDims", "only 3 dimensions are supported");
    for (const char* key : {"BinaryDataByteOrderMSB", "ElementByteOrderMSB"}) {
        const auto it = header.find(key);
        if (it != header.end() && it->second != "False") throw ParseError(key, "big-endian payloads are not supported");
    }
    if (const auto it = header.find("CompressedData"); it != header.end() && it->second != "False")
        throw ParseError("CompressedData", "compressed payloads are not supported");

    RawImage img{};
    const auto dim = parse_list<long long>("DimSize", require("DimSize"), 3);
    for (long long n : dim)
        if (n <= 0) throw ParseError("DimSize", "dimensions must be positive");
    img.dims = {static_cast<std::size_t>(dim[0]), static_cast<std::size_t>(dim[1]), static_cast<std::size_t>(dim[2])};

    std::vector<double> sp{1.0, 1.0, 1.0};
    if (header.count("ElementSpacing")) sp = parse_list<double>("ElementSpacing", header["ElementSpacing"], 3);
    img.spacing = {sp[0], sp[1], sp[2]};
    if (!img.spacing.valid()) throw ParseError("ElementSpacing", "spacing must be positive");

    const std::string& type = require("ElementType");
    if (type == "MET_UCHAR") img.type = ElementType::uchar;
    else if (type == "MET_FLOAT") img.type = ElementType::float32;
    else if (type == "MET_DOUBLE") img.type = ElementType::float64;
    else throw ParseError("ElementType", "unsupported element type '" + type + "'");

    const std::size_t expected = img.dims.size() * element_size(img.type);
    const std::string& data_file = header["ElementDataFile"];
    std::ifstream detached;
    std::istream* src = &in;
    if (data_file != "LOCAL") {
        detached.open(path.parent_path() / data_file, std::ios::binary);
        if (!detached) throw ParseError("ElementDataFile", "cannot open '" + data_file + "'");
        src = &detached;
    }
    img.payload.assign(std::istreambuf_iterator<char>(*src), std::istreambuf_iterator<char>());
    if (img.payload.size() != expected)
        throw ParseError("DimSize", "payload has " + std::to_string(img.payload.size()) + " bytes, header implies " +
                                        std::to_string(expected));
    return img;
}

} // namespace

void write_mhd(const fs::path& path, const ScalarVolume& v, ElementType type) {
    if (!all_finite(v)) throw InvalidArgument("write_mhd: volume contains non-finite values");
    std::string payload(v.size() * element_size(type), '\0');
    char* out = payload.data();
    for (double x : v.data()) {
        switch (type) {
        case ElementType::uchar:
            if (x < 0.0 || x > 255.0 || x != static_cast<double>(static_cast<std::uint8_t>(x)))
                throw InvalidArgument("write_mhd: value not representable as MET_UCHAR");
            *out++ = static_cast<char>(static_cast<std::uint8_t>(x));
            break;
        case ElementType::float32:
            store_le(std::bit_cast<std::uint32_t>(static_cast<float>(x)), out);
            out += 4;
            break;
        case ElementType::float64:
            store_le(std::bit_cast<std::uint64_t>(x), out);
            out += 8;
            break;
        }
    }
    write_file(path, header_text(v.dims(), v.spacing(), type), payload);
}

void write_mhd(const fs::path& path, const LabelVolume& v) {
    require_binary(v);
    std::string payload(reinterpret_cast<const char*>(v.data().data()), v.size());
    write_file(path, header_text(v.dims(), v.spacing(), ElementType::uchar), payload);
}

ScalarVolume read_mhd_scalar(const fs::path& path) {
    RawImage img = read_raw(path);
    std::vector<double> data(img.dims.size());
    const char* in = img.payload.data();
    for (double& x : data) {
        switch (img.type) {
        case ElementType::uchar: x = static_cast<unsigned char>(*in++); break;
        case ElementType::float32:
            x = std::bit_cast<float>(load_le<std::uint32_t>(in));
            in += 4;
            break;
        case ElementType::float64:
            x = std::bit_cast<double>(load_le<std::uint64_t>(in));
            in += 8;
            break;
        }
        if (!std::isfinite(x)) throw ParseError("payload", "non-finite value");
    }
    return ScalarVolume(img.dims, img.spacing, std::move(data));
}

LabelVolume read_mhd_label(const fs::path& path) {
    RawImage img = read_raw(path);
    if (img.type != ElementType::uchar)
        throw ParseError("ElementType", std::string("label volumes must be MET_UCHAR, got ") + element_type_name(img.type));
    std::vector<std::uint8_t> data(img.payload.begin(), img.payload.end());
    for (std::size_t idx = 0; idx < data.size(); ++idx)
        if (data[idx] > 1)
            throw ParseError("payload", "label voxel " + std::to_string(idx) + " has value " + std::to_string(data[idx]) +
                                            ", expected 0 or 1");
    return LabelVolume(img.dims, img.spacing, std::move(data));
}

} // namespace activeseg
