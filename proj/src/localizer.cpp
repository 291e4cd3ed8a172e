#include "wsol/localizer.hpp"

#include <cmath>
#include <string>

#include "wsol/error.hpp"
#include "wsol/kernels.hpp"
#include "wsol/rng.hpp"

namespace wsol {

LocalizerParams LocalizerParams::zeros(int n_classes) {
  if (n_classes < 1) fail(ErrorKind::InvalidParam, "class head needs at least one class");
  LocalizerParams p;
  p.w1.assign(kHiddenDim * kFeatureDim, 0.0);
  p.b1.assign(kHiddenDim, 0.0);
  p.w2.assign(kChannels * kHiddenDim, 0.0);
  p.b2.assign(kChannels, 0.0);
  p.head.assign(static_cast<std::size_t>(n_classes) * kHeadInputs, 0.0);
  p.n_classes = n_classes;
  return p;
}

LocalizerParams LocalizerParams::seeded(int n_classes, std::uint64_t seed) {
  auto p = zeros(n_classes);
  Rng rng(seed);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(kFeatureDim));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(kHiddenDim));
  for (auto& w : p.w1) w = rng.normal(0.0, s1);
  for (auto& w : p.w2) w = rng.normal(0.0, s2);
  return p;
}

PixelFeatures make_features(const Tensor& image, const Tensor& attention) {
  require_f32(image, 3, "make_features image");
  require_f32(attention, 2, "make_features attention");
  const int h = static_cast<int>(image.extent(0));
  const int w = static_cast<int>(image.extent(1));
  if (image.extent(2) != 3 || attention.extent(0) != image.extent(0) || attention.extent(1) != image.extent(1)) {
    fail(ErrorKind::InvalidInput, "make_features: image [H,W,3] and attention [H,W] must agree");
  }
  PixelFeatures f;
  f.height = h;
  f.width = w;
  f.values.resize(f.pixels() * kFeatureDim);
  const auto rgb = image.f32_data();
  const auto att = attention.f32_data();
  const double sx = w > 1 ? 1.0 / (w - 1) : 0.0;
  const double sy = h > 1 ? 1.0 / (h - 1) : 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      double* v = f.values.data() + p * kFeatureDim;
      v[0] = rgb[3 * p];
      v[1] = rgb[3 * p + 1];
      v[2] = rgb[3 * p + 2];
      v[3] = x * sx;
      v[4] = y * sy;
      v[5] = att[p];
    }
  }
  return f;
}

Tensor LocalizationMap::to_tensor() const {
  std::vector<float> data(probs.begin(), probs.end());
  return Tensor::f32({static_cast<std::size_t>(height), static_cast<std::size_t>(width), 2}, std::move(data));
}

Tensor LocalizationMap::foreground() const {
  std::vector<float> data(pixels());
  for (std::size_t p = 0; p < data.size(); ++p) data[p] = static_cast<float>(fg(p));
  return Tensor::f32({static_cast<std::size_t>(height), static_cast<std::size_t>(width)}, std::move(data));
}

LocalizationMap forward(const LocalizerParams& params, const PixelFeatures& features, ForwardCache* cache) {
  LocalizationMap m;
  m.height = features.height;
  m.width = features.width;
  m.probs.resize(features.pixels() * kChannels);
  std::vector<double> scratch;
  std::vector<double>& hidden = cache ? cache->hidden : scratch;
  hidden.resize(features.pixels() * kHiddenDim);
  kernels::mlp_forward(params, features.values, m.probs, hidden);
  return m;
}

ParamGradient backward(const LocalizerParams& params, const PixelFeatures& features, const ForwardCache& cache,
                       const LocalizationMap& map, std::span<const double> grad_probs) {
  const std::size_t n = features.pixels();
  if (grad_probs.size() != n * kChannels || cache.hidden.size() != n * kHiddenDim || map.pixels() != n) {
    fail(ErrorKind::InvalidInput, "backward: inconsistent dimensions");
  }
  ParamGradient g;
  g.w1.assign(params.w1.size(), 0.0);
  g.b1.assign(params.b1.size(), 0.0);
  g.w2.assign(params.w2.size(), 0.0);
  g.b2.assign(params.b2.size(), 0.0);

  double dh[kHiddenDim];
  for (std::size_t p = 0; p < n; ++p) {
    const double* gs = grad_probs.data() + p * kChannels;
    if (gs[0] == 0.0 && gs[1] == 0.0) continue;
    const double s0 = map.probs[p * kChannels];
    const double s1 = map.probs[p * kChannels + 1];
    // Softmax Jacobian: dz_c = S_c (dS_c - sum_k S_k dS_k).
    const double dot = s0 * gs[0] + s1 * gs[1];
    const double dz[kChannels] = {s0 * (gs[0] - dot), s1 * (gs[1] - dot)};
    const double* h = cache.hidden.data() + p * kHiddenDim;
    const double* f = features.values.data() + p * kFeatureDim;
    for (int j = 0; j < kHiddenDim; ++j) dh[j] = 0.0;
    for (int c = 0; c < kChannels; ++c) {
      g.b2[c] += dz[c];
      for (int j = 0; j < kHiddenDim; ++j) {
        g.w2[c * kHiddenDim + j] += dz[c] * h[j];
        dh[j] += params.w2[c * kHiddenDim + j] * dz[c];
      }
    }
    for (int j = 0; j < kHiddenDim; ++j) {
      const double da = dh[j] * (1.0 - h[j] * h[j]);
      g.b1[j] += da;
      for (int i = 0; i < kFeatureDim; ++i) g.w1[j * kFeatureDim + i] += da * f[i];
    }
  }
  return g;
}

namespace {

Tensor to_f32(const std::vector<double>& v, std::vector<std::size_t> shape) {
  return Tensor::f32(std::move(shape), std::vector<float>(v.begin(), v.end()));
}

std::vector<double> from_f32(const Tensor& t, const std::vector<std::size_t>& shape, const char* name) {
  if (t.dtype() != DType::F32 || t.shape() != shape) {
    fail(ErrorKind::Format, std::string("checkpoint tensor '") + name + "' has unexpected shape");
  }
  auto d = t.f32_data();
  return {d.begin(), d.end()};
}

}  // namespace

void save_params(const LocalizerParams& params, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create checkpoint directory " + dir.string());
  write_tensor(to_f32(params.w1, {kHiddenDim, kFeatureDim}), dir / "w1.tnsr");
  write_tensor(to_f32(params.b1, {kHiddenDim}), dir / "b1.tnsr");
  write_tensor(to_f32(params.w2, {kChannels, kHiddenDim}), dir / "w2.tnsr");
  write_tensor(to_f32(params.b2, {kChannels}), dir / "b2.tnsr");
  write_tensor(to_f32(params.head, {static_cast<std::size_t>(params.n_classes), kHeadInputs}), dir / "head.tnsr");
}

LocalizerParams load_params(const std::filesystem::path& dir) {
  const Tensor head = read_tensor(dir / "head.tnsr");
  if (head.rank() != 2 || head.extent(1) != kHeadInputs) fail(ErrorKind::Format, "checkpoint head has bad shape");
  LocalizerParams p;
  p.n_classes = static_cast<int>(head.extent(0));
  p.w1 = from_f32(read_tensor(dir / "w1.tnsr"), {kHiddenDim, kFeatureDim}, "w1");
  p.b1 = from_f32(read_tensor(dir / "b1.tnsr"), {kHiddenDim}, "b1");
  p.w2 = from_f32(read_tensor(dir / "w2.tnsr"), {kChannels, kHiddenDim}, "w2");
  p.b2 = from_f32(read_tensor(dir / "b2.tnsr"), {kChannels}, "b2");
  p.head = from_f32(head, head.shape(), "head");
  return p;
}

}  // namespace wsol
