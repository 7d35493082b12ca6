#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aquagan/tensor.hpp"

namespace aquagan {

struct NamedTensor {
  std::string name;
  Tensor value;
  // Buffers such as batch-norm running statistics are not trainable.
  bool trainable = true;
};

// Ordered, named collection of parameter tensors. Also used as the gradient
// container (same names and shapes, zero-initialized).
class ParamSet {
 public:
  Tensor& add(std::string name, Shape shape, bool trainable = true);

  bool contains(std::string_view name) const;
  Tensor& at(std::string_view name);
  const Tensor& at(std::string_view name) const;

  std::span<NamedTensor> entries() { return entries_; }
  std::span<const NamedTensor> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t parameter_count(bool trainable_only = true) const;

  ParamSet zeros_like() const;
  void zero();

  // CRC-32 over names, shapes and raw value bits.
  std::uint32_t checksum() const;

  friend bool operator==(const ParamSet& a, const ParamSet& b);

 private:
  std::vector<NamedTensor> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

std::uint32_t crc32_bytes(std::span<const std::uint8_t> bytes, std::uint32_t seed = 0);
std::string hex32(std::uint32_t v);

}  // namespace aquagan
