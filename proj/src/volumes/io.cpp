#include "livseg/volumes/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "livseg/core/format.hpp"

namespace livseg::volumes {
namespace {

namespace fs = std::filesystem;

constexpr std::array<char, 4> kMagic{'V', 'O', 'L', '1'};

std::string lower_ext(const fs::path& p) {
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return e;
}

void put_u32(std::ostream& os, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f32(std::ostream& os, float f) { put_u32(os, std::bit_cast<std::uint32_t>(f)); }

std::uint32_t get_u32(const unsigned char* b) {
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::vector<unsigned char> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw FormatError("cannot open " + p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::size_t element_size(DType t) { return t == DType::U8 ? 1 : 4; }

void decode_samples(const unsigned char* bytes, std::size_t nbytes, RawImage& img, const std::string& where) {
    const std::size_t n = img.grid.size();
    if (nbytes != n * element_size(img.dtype))
        throw FormatError(where + ": data length " + std::to_string(nbytes) + " bytes, expected " +
                          std::to_string(n * element_size(img.dtype)));
    if (img.dtype == DType::U8) {
        img.u8.assign(bytes, bytes + n);
    } else {
        img.f32.resize(n);
        for (std::size_t i = 0; i < n; ++i) img.f32[i] = std::bit_cast<float>(get_u32(bytes + 4 * i));
    }
}

void encode_samples(std::ostream& os, const RawImage& img) {
    if (img.dtype == DType::U8) {
        os.write(reinterpret_cast<const char*>(img.u8.data()), static_cast<std::streamsize>(img.u8.size()));
    } else {
        std::vector<unsigned char> buf(img.f32.size() * 4);
        for (std::size_t i = 0; i < img.f32.size(); ++i) {
            const std::uint32_t v = std::bit_cast<std::uint32_t>(img.f32[i]);
            buf[4 * i] = static_cast<unsigned char>(v);
            buf[4 * i + 1] = static_cast<unsigned char>(v >> 8);
            buf[4 * i + 2] = static_cast<unsigned char>(v >> 16);
            buf[4 * i + 3] = static_cast<unsigned char>(v >> 24);
        }
        os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    }
}

void check_samples(const RawImage& img) {
    const std::size_t expect = img.grid.size();
    const std::size_t have = img.dtype == DType::U8 ? img.u8.size() : img.f32.size();
    if (have != expect) throw FormatError("image sample count does not match its grid");
}

// VOL1: magic, u32 dims x3, f32 spacing x3, u8 dtype, samples; little-endian.
RawImage read_vol1(const fs::path& path) {
    const auto bytes = slurp(path);
    constexpr std::size_t header = 4 + 12 + 12 + 1;
    if (bytes.size() < header || std::memcmp(bytes.data(), kMagic.data(), 4) != 0)
        throw FormatError(path.string() + ": missing VOL1 header");
    RawImage img;
    const auto* p = bytes.data() + 4;
    const auto nx = get_u32(p), ny = get_u32(p + 4), nz = get_u32(p + 8);
    if (nx == 0 || ny == 0 || nz == 0 || nx > (1u << 30) || ny > (1u << 30) || nz > (1u << 30))
        throw FormatError(path.string() + ": invalid dims");
    img.grid.dims = {static_cast<int>(nx), static_cast<int>(ny), static_cast<int>(nz)};
    img.grid.spacing = {std::bit_cast<float>(get_u32(p + 12)), std::bit_cast<float>(get_u32(p + 16)),
                        std::bit_cast<float>(get_u32(p + 20))};
    if (!(img.grid.spacing.sx > 0) || !(img.grid.spacing.sy > 0) || !(img.grid.spacing.sz > 0))
        throw FormatError(path.string() + ": spacing must be positive");
    const std::uint8_t code = p[24];
    if (code > 1) throw FormatError(path.string() + ": unsupported dtype code " + std::to_string(code));
    img.dtype = static_cast<DType>(code);
    decode_samples(bytes.data() + header, bytes.size() - header, img, path.string());
    return img;
}

void write_vol1(const fs::path& path, const RawImage& img) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path.string());
    out.write(kMagic.data(), 4);
    put_u32(out, static_cast<std::uint32_t>(img.grid.dims.nx));
    put_u32(out, static_cast<std::uint32_t>(img.grid.dims.ny));
    put_u32(out, static_cast<std::uint32_t>(img.grid.dims.nz));
    put_f32(out, static_cast<float>(img.grid.spacing.sx));
    put_f32(out, static_cast<float>(img.grid.spacing.sy));
    put_f32(out, static_cast<float>(img.grid.spacing.sz));
    const char code = static_cast<char>(img.dtype);
    out.write(&code, 1);
    encode_samples(out, img);
    if (!out) throw FormatError("short write to " + path.string());
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    for (std::string tok; is >> tok;) out.push_back(tok);
    return out;
}

RawImage read_mhd(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    std::map<std::string, std::string> kv;
    for (std::string line; std::getline(in, line);) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (!trim(line).empty()) throw FormatError(path.string() + ": malformed header line '" + line + "'");
            continue;
        }
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    auto need = [&](const std::string& key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw FormatError(path.string() + ": missing key " + key);
        return it->second;
    };
    for (const char* key : {"ElementByteOrderMSB", "BinaryDataByteOrderMSB"}) {
        auto it = kv.find(key);
        if (it != kv.end() && (it->second == "True" || it->second == "true"))
            throw FormatError(path.string() + ": big-endian data is not supported");
    }
    if (trim(need("NDims")) != "3") throw FormatError(path.string() + ": only NDims = 3 is supported");

    RawImage img;
    const auto dims = split_ws(need("DimSize"));
    if (dims.size() != 3) throw FormatError(path.string() + ": DimSize needs 3 values");
    int d[3];
    for (int i = 0; i < 3; ++i) {
        double v = 0;
        try {
            v = parse_double(dims[i]);
        } catch (const std::exception&) {
            throw FormatError(path.string() + ": bad DimSize");
        }
        if (v < 1 || v != std::floor(v) || v > (1 << 30)) throw FormatError(path.string() + ": bad DimSize");
        d[i] = static_cast<int>(v);
    }
    img.grid.dims = {d[0], d[1], d[2]};
    if (auto it = kv.find("ElementSpacing"); it != kv.end()) {
        const auto sp = split_ws(it->second);
        if (sp.size() != 3) throw FormatError(path.string() + ": ElementSpacing needs 3 values");
        try {
            img.grid.spacing = {parse_double(sp[0]), parse_double(sp[1]), parse_double(sp[2])};
        } catch (const std::exception&) {
            throw FormatError(path.string() + ": bad ElementSpacing");
        }
        if (!(img.grid.spacing.sx > 0) || !(img.grid.spacing.sy > 0) || !(img.grid.spacing.sz > 0))
            throw FormatError(path.string() + ": spacing must be positive");
    }
    const auto& type = need("ElementType");
    if (type == "MET_UCHAR")
        img.dtype = DType::U8;
    else if (type == "MET_FLOAT")
        img.dtype = DType::F32;
    else
        throw FormatError(path.string() + ": unsupported ElementType " + type);
    const auto& file = need("ElementDataFile");
    if (file == "LOCAL" || file == "LIST") throw FormatError(path.string() + ": inline data is not supported");
    const fs::path data_path = path.parent_path() / file;
    const auto bytes = slurp(data_path);
    decode_samples(bytes.data(), bytes.size(), img, data_path.string());
    return img;
}

void write_mhd(const fs::path& path, const RawImage& img) {
    fs::path raw = path;
    raw.replace_extension(".raw");
    {
        std::ofstream hdr(path, std::ios::trunc);
        if (!hdr) throw FormatError("cannot write " + path.string());
        hdr << "NDims = 3\n"
            << "DimSize = " << img.grid.dims.nx << ' ' << img.grid.dims.ny << ' ' << img.grid.dims.nz << '\n'
            << "ElementSpacing = " << format_double(img.grid.spacing.sx) << ' ' << format_double(img.grid.spacing.sy)
            << ' ' << format_double(img.grid.spacing.sz) << '\n'
            << "ElementType = " << (img.dtype == DType::U8 ? "MET_UCHAR" : "MET_FLOAT") << '\n'
            << "ElementDataFile = " << raw.filename().string() << '\n';
    }
    std::ofstream out(raw, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + raw.string());
    encode_samples(out, img);
}

} // namespace

RawImage read_image(const std::filesystem::path& path) {
    const auto ext = lower_ext(path);
    if (ext == ".mhd") return read_mhd(path);
    if (ext == ".vol") return read_vol1(path);
    throw FormatError("unrecognised image extension '" + ext + "' (expected .vol or .mhd)");
}

void write_image(const std::filesystem::path& path, const RawImage& image) {
    check_samples(image);
    const auto ext = lower_ext(path);
    if (ext == ".mhd")
        write_mhd(path, image);
    else if (ext == ".vol")
        write_vol1(path, image);
    else
        throw FormatError("unrecognised image extension '" + ext + "' (expected .vol or .mhd)");
}

Volume3D load_volume(const std::filesystem::path& path) {
    RawImage img = read_image(path);
    if (img.dtype == DType::U8)
        return Volume3D(img.grid, ValueKind::Normalized8, std::vector<float>(img.u8.begin(), img.u8.end()));
    return Volume3D(img.grid, ValueKind::HuFloat, std::move(img.f32));
}

Mask3D load_mask(const std::filesystem::path& path) {
    RawImage img = read_image(path);
    if (img.dtype != DType::U8) throw FormatError(path.string() + ": masks must be stored as u8");
    try {
        return Mask3D(img.grid, std::move(img.u8));
    } catch (const InvalidArgument& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

ProbMap3D load_probmap(const std::filesystem::path& path) {
    RawImage img = read_image(path);
    if (img.dtype != DType::F32) throw FormatError(path.string() + ": probability maps must be stored as f32");
    try {
        return ProbMap3D(img.grid, std::move(img.f32));
    } catch (const InvalidArgument& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void save_volume(const Volume3D& v, const std::filesystem::path& path) {
    RawImage img;
    img.grid = v.grid();
    if (v.kind() == ValueKind::Normalized8) {
        img.dtype = DType::U8;
        img.u8.reserve(v.size());
        for (float f : v.data()) img.u8.push_back(static_cast<std::uint8_t>(f));
    } else {
        img.dtype = DType::F32;
        img.f32.assign(v.data().begin(), v.data().end());
    }
    write_image(path, img);
}

void save_volume(const Mask3D& m, const std::filesystem::path& path) {
    RawImage img;
    img.grid = m.grid();
    img.dtype = DType::U8;
    img.u8.assign(m.data().begin(), m.data().end());
    write_image(path, img);
}

void save_volume(const ProbMap3D& p, const std::filesystem::path& path) {
    RawImage img;
    img.grid = p.grid();
    img.dtype = DType::F32;
    img.f32.assign(p.data().begin(), p.data().end());
    write_image(path, img);
}

} // namespace livseg::volumes
