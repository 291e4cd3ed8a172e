#include "wsol/tensor.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <string>

#include "wsol/error.hpp"

namespace wsol {
namespace {

constexpr std::uint8_t kMagic[4] = {0x54, 0x4E, 0x53, 0x52};

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void validate_shape(const std::vector<std::size_t>& shape) {
  if (shape.empty() || shape.size() > 4) {
    fail(ErrorKind::InvalidInput, "tensor rank must be 1..4, got " + std::to_string(shape.size()));
  }
  for (auto e : shape) {
    if (e == 0) fail(ErrorKind::InvalidInput, "tensor extents must be >= 1");
    if (e > 0xFFFFFFFFu) fail(ErrorKind::InvalidInput, "tensor extent exceeds u32");
  }
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

Tensor::Tensor(DType dtype, std::vector<std::size_t> shape) : dtype_(dtype), shape_(std::move(shape)) {
  validate_shape(shape_);
}

Tensor Tensor::f32(std::vector<std::size_t> shape) {
  Tensor t(DType::F32, std::move(shape));
  t.data_ = std::vector<float>(product(t.shape_), 0.0f);
  return t;
}

Tensor Tensor::f32(std::vector<std::size_t> shape, std::vector<float> data) {
  Tensor t(DType::F32, std::move(shape));
  if (data.size() != product(t.shape_)) {
    fail(ErrorKind::InvalidInput, "tensor data length does not match shape");
  }
  t.data_ = std::move(data);
  return t;
}

Tensor Tensor::u8(std::vector<std::size_t> shape) {
  Tensor t(DType::U8, std::move(shape));
  t.data_ = std::vector<std::uint8_t>(product(t.shape_), 0);
  return t;
}

Tensor Tensor::u8(std::vector<std::size_t> shape, std::vector<std::uint8_t> data) {
  Tensor t(DType::U8, std::move(shape));
  if (data.size() != product(t.shape_)) {
    fail(ErrorKind::InvalidInput, "tensor data length does not match shape");
  }
  t.data_ = std::move(data);
  return t;
}

std::size_t Tensor::size() const noexcept { return shape_.empty() ? 0 : product(shape_); }

std::span<float> Tensor::f32_data() {
  if (auto* v = std::get_if<std::vector<float>>(&data_); v && dtype_ == DType::F32) return *v;
  fail(ErrorKind::InvalidInput, "tensor is not f32");
}

std::span<const float> Tensor::f32_data() const {
  if (auto* v = std::get_if<std::vector<float>>(&data_); v && dtype_ == DType::F32) return *v;
  fail(ErrorKind::InvalidInput, "tensor is not f32");
}

std::span<std::uint8_t> Tensor::u8_data() {
  if (auto* v = std::get_if<std::vector<std::uint8_t>>(&data_); v && dtype_ == DType::U8) return *v;
  fail(ErrorKind::InvalidInput, "tensor is not u8");
}

std::span<const std::uint8_t> Tensor::u8_data() const {
  if (auto* v = std::get_if<std::vector<std::uint8_t>>(&data_); v && dtype_ == DType::U8) return *v;
  fail(ErrorKind::InvalidInput, "tensor is not u8");
}

bool operator==(const Tensor& a, const Tensor& b) {
  if (a.dtype_ != b.dtype_ || a.shape_ != b.shape_) return false;
  if (a.empty()) return true;
  if (a.dtype_ == DType::F32) {
    auto x = a.f32_data();
    auto y = b.f32_data();
    return std::memcmp(x.data(), y.data(), x.size_bytes()) == 0;
  }
  auto x = a.u8_data();
  auto y = b.u8_data();
  return std::equal(x.begin(), x.end(), y.begin());
}

void require_f32(const Tensor& t, std::size_t rank, const char* what) {
  if (t.empty() || t.dtype() != DType::F32 || t.rank() != rank) {
    fail(ErrorKind::InvalidInput,
         std::string(what) + ": expected f32 tensor of rank " + std::to_string(rank));
  }
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  if (t.empty()) fail(ErrorKind::InvalidInput, "cannot encode an empty tensor");
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.push_back(kTensorFormatVersion);
  out.push_back(static_cast<std::uint8_t>(t.dtype()));
  out.push_back(static_cast<std::uint8_t>(t.rank()));
  for (auto e : t.shape()) put_u32(out, static_cast<std::uint32_t>(e));

  if (t.dtype() == DType::U8) {
    auto d = t.u8_data();
    out.insert(out.end(), d.begin(), d.end());
    return out;
  }
  auto d = t.f32_data();
  const std::size_t header = out.size();
  out.resize(header + d.size_bytes());
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data() + header, d.data(), d.size_bytes());
  } else {
    for (std::size_t i = 0; i < d.size(); ++i) {
      const auto bits = std::bit_cast<std::uint32_t>(d[i]);
      for (int b = 0; b < 4; ++b) out[header + 4 * i + b] = static_cast<std::uint8_t>(bits >> (8 * b));
    }
  }
  return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 7 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    fail(ErrorKind::Format, "bad TNSR magic");
  }
  if (bytes[4] != kTensorFormatVersion) {
    fail(ErrorKind::Format, "unsupported TNSR version " + std::to_string(bytes[4]));
  }
  const std::uint8_t code = bytes[5];
  if (code != static_cast<std::uint8_t>(DType::F32) && code != static_cast<std::uint8_t>(DType::U8)) {
    fail(ErrorKind::Format, "unknown TNSR dtype code " + std::to_string(code));
  }
  const std::size_t ndim = bytes[6];
  if (ndim < 1 || ndim > 4) fail(ErrorKind::Format, "TNSR rank must be 1..4");
  const std::size_t header = 7 + 4 * ndim;
  if (bytes.size() < header) fail(ErrorKind::Format, "truncated TNSR header");

  std::vector<std::size_t> shape(ndim);
  for (std::size_t i = 0; i < ndim; ++i) {
    shape[i] = get_u32(bytes.data() + 7 + 4 * i);
    if (shape[i] == 0) fail(ErrorKind::Format, "TNSR extent of zero");
  }
  const std::size_t count = product(shape);
  const std::size_t elem = code == static_cast<std::uint8_t>(DType::F32) ? 4 : 1;
  if ((bytes.size() - header) / elem < count || bytes.size() - header != count * elem) {
    fail(ErrorKind::Format, "TNSR payload length does not match declared extents");
  }

  const std::uint8_t* payload = bytes.data() + header;
  if (elem == 1) {
    return Tensor::u8(std::move(shape), std::vector<std::uint8_t>(payload, payload + count));
  }
  std::vector<float> data(count);
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(data.data(), payload, count * 4);
  } else {
    for (std::size_t i = 0; i < count; ++i) data[i] = std::bit_cast<float>(get_u32(payload + 4 * i));
  }
  return Tensor::f32(std::move(shape), std::move(data));
}

void write_tensor(const Tensor& t, const std::filesystem::path& path) {
  const auto bytes = encode_tensor(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_tensor(bytes);
}

}  // namespace wsol
