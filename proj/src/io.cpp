#include "hiersearch/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "hiersearch/error.hpp"

namespace hiersearch {

namespace {

// Byte image of a double in little-endian order.
void put_le(double value, unsigned char out[8]) {
  uint64_t bits;
  std::memcpy(&bits, &value, 8);
  for (int i = 0; i < 8; ++i) out[i] = static_cast<unsigned char>(bits >> (8 * i));
}

double get_le(const unsigned char in[8]) {
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(in[i]) << (8 * i);
  double value;
  std::memcpy(&value, &bits, 8);
  return value;
}

}  // namespace

void write_f64_blob(const std::filesystem::path& path,
                    std::span<const double> values) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    fail(ErrorKind::IoError, "cannot open '" + path.string() + "' for writing");
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
  } else {
    for (double v : values) {
      unsigned char buf[8];
      put_le(v, buf);
      out.write(reinterpret_cast<const char*>(buf), 8);
    }
  }
  if (!out) fail(ErrorKind::IoError, "failed writing '" + path.string() + "'");
}

std::vector<double> read_f64_blob(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) fail(ErrorKind::IoError, "cannot open '" + path.string() + "'");
  std::streamsize bytes = in.tellg();
  if (bytes % 8 != 0)
    fail(ErrorKind::IoError,
         "'" + path.string() + "' is not a whole number of float64 values");
  in.seekg(0);
  std::vector<double> values(static_cast<size_t>(bytes / 8));
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(values.data()), bytes);
  } else {
    std::vector<unsigned char> raw(static_cast<size_t>(bytes));
    in.read(reinterpret_cast<char*>(raw.data()), bytes);
    for (size_t i = 0; i < values.size(); ++i) values[i] = get_le(&raw[i * 8]);
  }
  if (!in) fail(ErrorKind::IoError, "failed reading '" + path.string() + "'");
  return values;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open '" + path.string() + "'");
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorKind::IoError, "failed reading '" + path.string() + "'");
  return content;
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    fail(ErrorKind::IoError, "cannot open '" + path.string() + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) fail(ErrorKind::IoError, "failed writing '" + path.string() + "'");
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::string text = read_text_file(path);
  nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
  if (value.is_discarded())
    fail(ErrorKind::ParseError, "'" + path.string() + "' is not valid JSON");
  return value;
}

void write_json_file(const std::filesystem::path& path,
                     const nlohmann::json& value) {
  write_text_file(path, value.dump(2) + "\n");
}

uint64_t fnv1a64(std::span<const unsigned char> bytes) {
  uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char b : bytes) {
    hash ^= b;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

std::string fnv1a64_hex(std::string_view text) {
  uint64_t hash = fnv1a64(std::span<const unsigned char>(
      reinterpret_cast<const unsigned char*>(text.data()), text.size()));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

std::string fnv1a64_hex_file(const std::filesystem::path& path) {
  return fnv1a64_hex(read_text_file(path));
}

}  // namespace hiersearch
