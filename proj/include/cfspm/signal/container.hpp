// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cfspm/numeric/tensor.hpp"

namespace cfspm::signal {

/// On-disk array layout (little-endian):
///   "CFSP" | version u8 = 1 | dtype u8 | ndim u8 | 0x00 | ndim x u64 | payload
enum class DType : std::uint8_t { kF32 = 0, kF64 = 1, kI64 = 2 };

inline constexpr std::uint8_t kContainerVersion = 1;

std::size_t dtype_size(DType t);

/// A typed array in storage form; payload holds native little-endian bytes.
struct Container {
  DType dtype = DType::kF64;
  Shape shape;
  std::vector<std::uint8_t> payload;

  bool operator==(const Container&) const = default;
};

std::vector<std::uint8_t> encode(const Container& c);
Container decode(std::span<const std::uint8_t> bytes);

void write_container(const std::filesystem::path& path, const Container& c);
Container read_container(const std::filesystem::path& path);

/// Requires finite data. kF32 rounds to single precision.
Container from_tensor(const Tensor& t, DType dtype = DType::kF64);
Tensor to_tensor(const Container& c);
Container from_labels(std::span<const std::int64_t> labels);
std::vector<std::int64_t> to_labels(const Container& c);

}  // namespace cfspm::signal
