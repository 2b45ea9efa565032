#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace hiersearch {

// Row-major little-endian float64 blobs, the wire format for every matrix
// artifact (embedding tables, mapper weights, index embeddings).
void write_f64_blob(const std::filesystem::path& path,
                    std::span<const double> values);
std::vector<double> read_f64_blob(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path,
                     const std::string& content);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path,
                     const nlohmann::json& value);

// FNV-1a 64-bit, rendered as 16 hex digits. Used for artifact fingerprints
// in manifests; not cryptographic.
uint64_t fnv1a64(std::span<const unsigned char> bytes);
std::string fnv1a64_hex(std::string_view text);
std::string fnv1a64_hex_file(const std::filesystem::path& path);

}  // namespace hiersearch
