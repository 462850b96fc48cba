#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sxt/grid.hpp"

namespace sxt {

// FNV-1a 64-bit over raw bytes; manifest checksums.
uint64_t fnv1a64(std::span<const std::byte> bytes);
uint64_t fnv1a64(std::span<const double> values);
std::string hex64(uint64_t v);

// Grid file format: <base>.json metadata sidecar plus <base>.raw little-endian
// float32 payload, x-fastest ordering.
void write_image(const std::filesystem::path& base, const ScalarImage& img);
ScalarImage read_image(const std::filesystem::path& base);
void write_volume(const std::filesystem::path& base, const ScalarVolume& vol);
ScalarVolume read_volume(const std::filesystem::path& base);

// Polyline table: header row "line_id,x,y,z", one row per point.
void write_polylines_csv(const std::filesystem::path& path, const std::vector<Polyline3>& lines);
std::vector<Polyline3> read_polylines_csv(const std::filesystem::path& path, double radius = 1.0);

// 8-bit portable graymap, input rescaled to [0, 255] by its own range.
void write_pgm(const std::filesystem::path& path, const ScalarImage& img);

uint64_t file_checksum(const std::filesystem::path& path);

}  // namespace sxt
