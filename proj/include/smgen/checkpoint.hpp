#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "smgen/errors.hpp"
#include "smgen/nn.hpp"

namespace smgen {

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace detail {

template <typename T>
void write_pod(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& f, const std::string& path) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!f) throw DataError("checkpoint: truncated file " + path);
  return v;
}

}  // namespace detail

// Versioned little-endian container of named parameter tensors. The config
// digest pins the architecture the weights belong to; loading into a model
// built from a different config is refused.
inline void save_checkpoint(
    const std::string& path,
    const std::vector<std::pair<std::string, const nn::Tensor*>>& tensors,
    std::uint64_t config_digest) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("checkpoint: cannot open " + path + " for writing");
  f.write("SMGCKPT1", 8);
  detail::write_pod<std::uint32_t>(f, 1);
  detail::write_pod<std::uint64_t>(f, config_digest);
  detail::write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    detail::write_pod<std::uint16_t>(f, static_cast<std::uint16_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::write_pod<std::uint8_t>(f, static_cast<std::uint8_t>(t->shape.size()));
    for (auto d : t->shape) detail::write_pod<std::uint64_t>(f, d);
    f.write(reinterpret_cast<const char*>(t->v.data()),
            static_cast<std::streamsize>(t->v.size() * sizeof(double)));
  }
  if (!f) throw DataError("checkpoint: write failed for " + path);
}

inline void load_checkpoint(
    const std::string& path,
    const std::vector<std::pair<std::string, nn::Tensor*>>& tensors,
    std::uint64_t expected_digest) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("checkpoint: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::string(magic, 8) != "SMGCKPT1")
    throw DataError("checkpoint: bad magic in " + path);
  const auto version = detail::read_pod<std::uint32_t>(f, path);
  if (version != 1)
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  const auto digest = detail::read_pod<std::uint64_t>(f, path);
  if (digest != expected_digest)
    throw DataError("checkpoint: config digest mismatch for " + path +
                    " (file was written with different settings)");
  const auto count = detail::read_pod<std::uint32_t>(f, path);
  if (count != tensors.size())
    throw DataError("checkpoint: expected " + std::to_string(tensors.size()) +
                    " tensors, file has " + std::to_string(count));
  for (const auto& [name, t] : tensors) {
    const auto name_len = detail::read_pod<std::uint16_t>(f, path);
    std::string got(name_len, '\0');
    f.read(got.data(), name_len);
    if (!f || got != name)
      throw DataError("checkpoint: tensor name mismatch, expected '" + name +
                      "', got '" + got + "'");
    const auto ndim = detail::read_pod<std::uint8_t>(f, path);
    std::vector<std::size_t> shape(ndim);
    for (auto& d : shape)
      d = static_cast<std::size_t>(detail::read_pod<std::uint64_t>(f, path));
    if (shape != t->shape)
      throw DataError("checkpoint: shape mismatch for tensor '" + name + "'");
    f.read(reinterpret_cast<char*>(t->v.data()),
           static_cast<std::streamsize>(t->v.size() * sizeof(double)));
    if (!f) throw DataError("checkpoint: truncated tensor '" + name + "'");
  }
}

}  // namespace smgen
