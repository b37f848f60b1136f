// SPDX-License-Identifier: Apache-2.0
#include "cfspm/signal/container.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "cfspm/error.hpp"

namespace cfspm::signal {

namespace {

constexpr std::uint8_t kMagic[4] = {0x43, 0x46, 0x53, 0x50};
constexpr std::size_t kHeader = 8;

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  auto bits = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  out.insert(out.end(), bits.begin(), bits.end());
}

template <typename T>
T get_le(const std::uint8_t* p) {
  std::array<std::uint8_t, sizeof(T)> bits;
  std::memcpy(bits.data(), p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  return std::bit_cast<T>(bits);
}

template <typename T>
std::vector<std::uint8_t> pack(std::span<const T> values) {
  std::vector<std::uint8_t> out;
  out.reserve(values.size() * sizeof(T));
  for (T v : values) put_le(out, v);
  return out;
}

}  // namespace

std::size_t dtype_size(DType t) {
  switch (t) {
    case DType::kF32:
      return 4;
    case DType::kF64:
    case DType::kI64:
      return 8;
  }
  throw IoError("unknown dtype code " + std::to_string(static_cast<int>(t)));
}

std::vector<std::uint8_t> encode(const Container& c) {
  if (c.shape.size() > 255) throw IoError("container rank exceeds 255");
  if (c.payload.size() != shape_numel(c.shape) * dtype_size(c.dtype)) {
    throw IoError("container payload size does not match shape " + shape_str(c.shape));
  }
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.push_back(kContainerVersion);
  out.push_back(static_cast<std::uint8_t>(c.dtype));
  out.push_back(static_cast<std::uint8_t>(c.shape.size()));
  out.push_back(0);
  for (std::size_t d : c.shape) put_le<std::uint64_t>(out, d);
  out.insert(out.end(), c.payload.begin(), c.payload.end());
  return out;
}

Container decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeader || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw IoError("bad container magic");
  }
  if (bytes[4] != kContainerVersion) {
    throw IoError("container version " + std::to_string(bytes[4]) + " is not supported");
  }
  if (bytes[5] > 2) throw IoError("unknown dtype code " + std::to_string(bytes[5]));
  Container c;
  c.dtype = static_cast<DType>(bytes[5]);
  const std::size_t ndim = bytes[6];
  if (bytes.size() < kHeader + 8 * ndim) throw IoError("truncated container header");
  for (std::size_t i = 0; i < ndim; ++i) {
    c.shape.push_back(static_cast<std::size_t>(get_le<std::uint64_t>(bytes.data() + kHeader + 8 * i)));
  }
  const std::size_t offset = kHeader + 8 * ndim;
  const std::size_t need = shape_numel(c.shape) * dtype_size(c.dtype);
  if (bytes.size() - offset < need) {
    throw IoError("truncated container payload: expected " + std::to_string(need) +
                  " bytes, found " + std::to_string(bytes.size() - offset));
  }
  if (bytes.size() - offset > need) throw IoError("trailing bytes after container payload");
  c.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset), bytes.end());
  return c;
}

void write_container(const std::filesystem::path& path, const Container& c) {
  const auto bytes = encode(c);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("failed writing " + path.string());
}

Container read_container(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode(bytes);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

Container from_tensor(const Tensor& t, DType dtype) {
  if (!all_finite(t.data())) throw IoError("refusing to store non-finite data");
  Container c{dtype, t.shape(), {}};
  switch (dtype) {
    case DType::kF64:
      c.payload = pack<double>(t.data());
      break;
    case DType::kF32: {
      std::vector<float> f(t.data().begin(), t.data().end());
      c.payload = pack<float>(f);
      break;
    }
    case DType::kI64: {
      std::vector<std::int64_t> v;
      for (double x : t.data()) v.push_back(static_cast<std::int64_t>(x));
      c.payload = pack<std::int64_t>(v);
      break;
    }
  }
  return c;
}

Tensor to_tensor(const Container& c) {
  const std::size_t n = shape_numel(c.shape);
  const std::size_t w = dtype_size(c.dtype);
  if (c.payload.size() != n * w) throw IoError("container payload size mismatch");
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* p = c.payload.data() + i * w;
    switch (c.dtype) {
      case DType::kF32:
        v[i] = get_le<float>(p);
        break;
      case DType::kF64:
        v[i] = get_le<double>(p);
        break;
      case DType::kI64:
        v[i] = static_cast<double>(get_le<std::int64_t>(p));
        break;
    }
  }
  return Tensor(c.shape, std::move(v));
}

Container from_labels(std::span<const std::int64_t> labels) {
  return {DType::kI64, Shape{labels.size()}, pack<std::int64_t>(labels)};
}

std::vector<std::int64_t> to_labels(const Container& c) {
  if (c.dtype != DType::kI64 || c.shape.size() != 1) {
    throw IoError("label container must be a 1-axis i64 array");
  }
  std::vector<std::int64_t> out(c.shape[0]);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = get_le<std::int64_t>(c.payload.data() + 8 * i);
  return out;
}

}  // namespace cfspm::signal
