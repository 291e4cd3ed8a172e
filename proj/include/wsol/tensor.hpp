#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

namespace wsol {

enum class DType : std::uint8_t { F32 = 1, U8 = 2 };

/// Dense row-major array of rank 1..4. The dtype is fixed at construction.
class Tensor {
 public:
  Tensor() = default;

  static Tensor f32(std::vector<std::size_t> shape);
  static Tensor f32(std::vector<std::size_t> shape, std::vector<float> data);
  static Tensor u8(std::vector<std::size_t> shape);
  static Tensor u8(std::vector<std::size_t> shape, std::vector<std::uint8_t> data);

  DType dtype() const noexcept { return dtype_; }
  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept;
  bool empty() const noexcept { return shape_.empty(); }

  std::span<float> f32_data();
  std::span<const float> f32_data() const;
  std::span<std::uint8_t> u8_data();
  std::span<const std::uint8_t> u8_data() const;

  /// Bitwise equality of dtype, shape and payload (NaN payloads compare by bits).
  friend bool operator==(const Tensor& a, const Tensor& b);

 private:
  Tensor(DType dtype, std::vector<std::size_t> shape);

  DType dtype_ = DType::F32;
  std::vector<std::size_t> shape_;
  std::variant<std::vector<float>, std::vector<std::uint8_t>> data_;
};

/// Throws InvalidInput unless `t` is an f32 tensor of the given rank.
void require_f32(const Tensor& t, std::size_t rank, const char* what);

// TNSR container: "TNSR", u8 version (1), u8 dtype code, u8 ndim,
// ndim x u32le extents, raw little-endian row-major payload.
inline constexpr std::uint8_t kTensorFormatVersion = 1;

void write_tensor(const Tensor& t, const std::filesystem::path& path);
Tensor read_tensor(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

}  // namespace wsol
