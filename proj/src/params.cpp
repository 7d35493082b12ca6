#include "aquagan/params.hpp"

#include <cstdio>
#include <cstring>

#include <zlib.h>

namespace aquagan {

Tensor& ParamSet::add(std::string name, Shape shape, bool trainable) {
  if (contains(name)) throw Error("duplicate parameter name '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.push_back({std::move(name), Tensor(shape), trainable});
  return entries_.back().value;
}

bool ParamSet::contains(std::string_view name) const { return index_.find(name) != index_.end(); }

Tensor& ParamSet::at(std::string_view name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("unknown parameter '" + std::string(name) + "'");
  return entries_[it->second].value;
}

const Tensor& ParamSet::at(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("unknown parameter '" + std::string(name) + "'");
  return entries_[it->second].value;
}

std::size_t ParamSet::parameter_count(bool trainable_only) const {
  std::size_t total = 0;
  for (const auto& e : entries_)
    if (e.trainable || !trainable_only) total += e.value.numel();
  return total;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  for (const auto& e : entries_) out.add(e.name, e.value.shape(), e.trainable);
  return out;
}

void ParamSet::zero() {
  for (auto& e : entries_) e.value.fill(0.0f);
}

std::uint32_t ParamSet::checksum() const {
  std::uint32_t crc = 0;
  for (const auto& e : entries_) {
    crc = crc32_bytes({reinterpret_cast<const std::uint8_t*>(e.name.data()), e.name.size()}, crc);
    const Shape& s = e.value.shape();
    const int dims[4] = {s.n, s.c, s.h, s.w};
    crc = crc32_bytes({reinterpret_cast<const std::uint8_t*>(dims), sizeof(dims)}, crc);
    crc = crc32_bytes({reinterpret_cast<const std::uint8_t*>(e.value.data()),
                       e.value.numel() * sizeof(float)},
                      crc);
  }
  return crc;
}

bool operator==(const ParamSet& a, const ParamSet& b) {
  if (a.entries_.size() != b.entries_.size()) return false;
  for (std::size_t i = 0; i < a.entries_.size(); ++i) {
    const auto& x = a.entries_[i];
    const auto& y = b.entries_[i];
    if (x.name != y.name || x.trainable != y.trainable || x.value.shape() != y.value.shape())
      return false;
    // Bitwise comparison: NaN payloads and signed zeros count as differences.
    if (std::memcmp(x.value.data(), y.value.data(), x.value.numel() * sizeof(float)) != 0)
      return false;
  }
  return true;
}

std::uint32_t crc32_bytes(std::span<const std::uint8_t> bytes, std::uint32_t seed) {
  uLong crc = seed;
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - offset, 1u << 30));
    crc = ::crc32(crc, bytes.data() + offset, chunk);
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::string hex32(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08x", v);
  return buf;
}

}  // namespace aquagan
