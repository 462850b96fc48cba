#include "sxt/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace sxt {

namespace {

constexpr uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr uint64_t kFnvPrime = 1099511628211ULL;

void write_bytes(const std::filesystem::path& path, const void* data, size_t n) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<char> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
    const std::streamsize n = in.tellg();
    in.seekg(0);
    std::vector<char> buf(static_cast<size_t>(n));
    if (n > 0) in.read(buf.data(), n);
    if (!in) throw std::runtime_error("read failed: " + path.string());
    return buf;
}

// float32 little-endian payload; internal storage is double
std::vector<float> to_f32(const std::vector<double>& v) {
    std::vector<float> out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
    if constexpr (std::endian::native == std::endian::big)
        for (float& f : out) {
            uint32_t u;
            std::memcpy(&u, &f, 4);
            u = __builtin_bswap32(u);
            std::memcpy(&f, &u, 4);
        }
    return out;
}

std::vector<double> from_f32(const std::vector<char>& bytes) {
    if (bytes.size() % 4 != 0) throw std::runtime_error("raw payload size not a multiple of 4");
    std::vector<double> out(bytes.size() / 4);
    for (size_t i = 0; i < out.size(); ++i) {
        uint32_t u;
        std::memcpy(&u, bytes.data() + 4 * i, 4);
        if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap32(u);
        float f;
        std::memcpy(&f, &u, 4);
        out[i] = static_cast<double>(f);
    }
    return out;
}

nlohmann::json load_sidecar(const std::filesystem::path& base) {
    std::filesystem::path meta = base;
    meta += ".json";
    std::ifstream in(meta);
    if (!in) throw std::runtime_error("cannot open sidecar: " + meta.string());
    nlohmann::json j;
    in >> j;
    return j;
}

}  // namespace

uint64_t fnv1a64(std::span<const std::byte> bytes) {
    uint64_t h = kFnvOffset;
    for (std::byte b : bytes) {
        h ^= static_cast<uint64_t>(b);
        h *= kFnvPrime;
    }
    return h;
}

uint64_t fnv1a64(std::span<const double> values) {
    return fnv1a64(std::as_bytes(values));
}

std::string hex64(uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return s;
}

void write_image(const std::filesystem::path& base, const ScalarImage& img) {
    if (img.data.empty()) throw std::invalid_argument("write_image: empty image");
    nlohmann::json meta{{"kind", "image"},
                        {"dims", {img.width, img.height}},
                        {"pitch", img.pixel_pitch},
                        {"dtype", "f32le"},
                        {"order", "x-fastest"}};
    std::filesystem::path mp = base;
    mp += ".json";
    std::ofstream out(mp);
    if (!out) throw std::runtime_error("cannot open for writing: " + mp.string());
    out << meta.dump(2) << "\n";
    const std::vector<float> payload = to_f32(img.data);
    std::filesystem::path rp = base;
    rp += ".raw";
    write_bytes(rp, payload.data(), payload.size() * 4);
}

ScalarImage read_image(const std::filesystem::path& base) {
    const nlohmann::json meta = load_sidecar(base);
    if (meta.at("kind").get<std::string>() != "image")
        throw std::runtime_error("not an image: " + base.string());
    if (meta.at("dtype").get<std::string>() != "f32le" ||
        meta.at("order").get<std::string>() != "x-fastest")
        throw std::runtime_error("unsupported image encoding: " + base.string());
    const auto dims = meta.at("dims");
    ScalarImage img(dims.at(0).get<int>(), dims.at(1).get<int>());
    img.pixel_pitch = meta.at("pitch").get<double>();
    std::filesystem::path rp = base;
    rp += ".raw";
    img.data = from_f32(read_bytes(rp));
    if (img.data.size() != static_cast<size_t>(img.width) * img.height)
        throw std::runtime_error("payload size does not match dims: " + base.string());
    return img;
}

void write_volume(const std::filesystem::path& base, const ScalarVolume& vol) {
    if (vol.data.empty()) throw std::invalid_argument("write_volume: empty volume");
    nlohmann::json meta{{"kind", "volume"},
                        {"dims", {vol.nx, vol.ny, vol.nz}},
                        {"pitch", vol.voxel_pitch},
                        {"dtype", "f32le"},
                        {"order", "x-fastest"}};
    std::filesystem::path mp = base;
    mp += ".json";
    std::ofstream out(mp);
    if (!out) throw std::runtime_error("cannot open for writing: " + mp.string());
    out << meta.dump(2) << "\n";
    const std::vector<float> payload = to_f32(vol.data);
    std::filesystem::path rp = base;
    rp += ".raw";
    write_bytes(rp, payload.data(), payload.size() * 4);
}

ScalarVolume read_volume(const std::filesystem::path& base) {
    const nlohmann::json meta = load_sidecar(base);
    if (meta.at("kind").get<std::string>() != "volume")
        throw std::runtime_error("not a volume: " + base.string());
    if (meta.at("dtype").get<std::string>() != "f32le" ||
        meta.at("order").get<std::string>() != "x-fastest")
        throw std::runtime_error("unsupported volume encoding: " + base.string());
    const auto dims = meta.at("dims");
    ScalarVolume vol(dims.at(0).get<int>(), dims.at(1).get<int>(), dims.at(2).get<int>());
    vol.voxel_pitch = meta.at("pitch").get<double>();
    std::filesystem::path rp = base;
    rp += ".raw";
    vol.data = from_f32(read_bytes(rp));
    if (vol.data.size() != static_cast<size_t>(vol.nx) * vol.ny * vol.nz)
        throw std::runtime_error("payload size does not match dims: " + base.string());
    return vol;
}

void write_polylines_csv(const std::filesystem::path& path, const std::vector<Polyline3>& lines) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << "line_id,x,y,z\n";
    out.precision(17);
    for (size_t id = 0; id < lines.size(); ++id)
        for (const Vec3& p : lines[id].points)
            out << id << "," << p.x << "," << p.y << "," << p.z << "\n";
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<Polyline3> read_polylines_csv(const std::filesystem::path& path, double radius) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
    std::string header;
    if (!std::getline(in, header) || header != "line_id,x,y,z")
        throw std::runtime_error("bad polyline header in " + path.string());
    std::vector<Polyline3> lines;
    std::string row;
    long long prev_id = -1;
    while (std::getline(in, row)) {
        if (row.empty()) continue;
        std::istringstream ss(row);
        long long id;
        double x, y, z;
        char c1, c2, c3;
        if (!(ss >> id >> c1 >> x >> c2 >> y >> c3 >> z) || c1 != ',' || c2 != ',' || c3 != ',')
            throw std::runtime_error("bad polyline row in " + path.string() + ": " + row);
        if (id != prev_id) {
            if (id != prev_id + 1)
                throw std::runtime_error("non-contiguous line ids in " + path.string());
            lines.emplace_back();
            lines.back().radius = radius;
            prev_id = id;
        }
        lines.back().points.push_back({x, y, z});
    }
    for (const Polyline3& l : lines) l.validate();
    return lines;
}

void write_pgm(const std::filesystem::path& path, const ScalarImage& img) {
    if (img.data.empty()) throw std::invalid_argument("write_pgm: empty image");
    double lo = img.data[0], hi = img.data[0];
    for (double v : img.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> row(static_cast<size_t>(img.width));
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x)
            row[static_cast<size_t>(x)] =
                static_cast<unsigned char>(255.0 * (img.at(x, y) - lo) / span + 0.5);
        out.write(reinterpret_cast<const char*>(row.data()), img.width);
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

uint64_t file_checksum(const std::filesystem::path& path) {
    const std::vector<char> bytes = read_bytes(path);
    return fnv1a64(std::as_bytes(std::span<const char>(bytes)));
}

}  // namespace sxt
