#include "wsol/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "wsol/error.hpp"

#ifdef WSOL_HAVE_OPENMP
#include <omp.h>
#endif

namespace wsol::kernels {

std::vector<double> gaussian_taps(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) fail(ErrorKind::InvalidParam, "blur sigma must be > 0");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (int d = -radius; d <= radius; ++d) {
    taps[d + radius] = std::exp(-static_cast<double>(d) * d / (2.0 * sigma * sigma));
    sum += taps[d + radius];
  }
  for (auto& t : taps) t /= sum;
  return taps;
}

int max_threads() {
#ifdef WSOL_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef WSOL_HAVE_OPENMP
  omp_set_num_threads(std::max(1, n));
#else
  (void)n;
#endif
}

namespace {

void check_blur_args(std::span<const float> in, std::span<float> out, int height, int width, int channels,
                     std::span<const double> taps) {
  const auto n = static_cast<std::size_t>(height) * width * channels;
  if (height < 1 || width < 1 || channels < 1 || in.size() != n || out.size() != n || taps.size() % 2 == 0) {
    fail(ErrorKind::InvalidInput, "separable_blur: inconsistent dimensions");
  }
}

// One output pixel of the horizontal pass; shared by both variants so the
// summation order is identical.
inline double blur_h(std::span<const float> in, int y, int x, int c, int width, int channels,
                     std::span<const double> taps, int radius) {
  double acc = 0.0;
  const std::size_t row = static_cast<std::size_t>(y) * width;
  for (int k = -radius; k <= radius; ++k) {
    const int xx = std::clamp(x + k, 0, width - 1);
    acc += taps[k + radius] * in[(row + xx) * channels + c];
  }
  return acc;
}

inline double blur_v(const std::vector<double>& tmp, int y, int x, int c, int height, int width, int channels,
                     std::span<const double> taps, int radius) {
  double acc = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    const int yy = std::clamp(y + k, 0, height - 1);
    acc += taps[k + radius] * tmp[(static_cast<std::size_t>(yy) * width + x) * channels + c];
  }
  return acc;
}

void check_potts_args(std::span<const double> features, int dim, std::span<const double> probs, int channels) {
  if (dim < 1 || channels < 1 || features.size() % dim != 0 ||
      probs.size() != features.size() / dim * channels) {
    fail(ErrorKind::InvalidInput, "dense_potts: inconsistent dimensions");
  }
}

inline double affinity(const double* fi, const double* fj, int dim) {
  double d2 = 0.0;
  for (int k = 0; k < dim; ++k) {
    const double d = fi[k] - fj[k];
    d2 += d * d;
  }
  return std::exp(-0.5 * d2);
}

// Row i of the energy: sum_c S_i^c A_i^c with A_i^c = sum_j W_ij (1 - S_j^c),
// B_i^c = sum_j W_ij S_j^c; the gradient is (A - B) / N^2 since W is symmetric.
inline double potts_row(std::size_t i, std::size_t n, std::span<const double> features, int dim,
                        std::span<const double> probs, int channels, double* grad_row, double* a, double* b) {
  std::fill(a, a + channels, 0.0);
  std::fill(b, b + channels, 0.0);
  const double* fi = features.data() + i * dim;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    const double w = affinity(fi, features.data() + j * dim, dim);
    for (int c = 0; c < channels; ++c) {
      const double s = probs[j * channels + c];
      a[c] += w * (1.0 - s);
      b[c] += w * s;
    }
  }
  const double inv_n2 = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  double row = 0.0;
  for (int c = 0; c < channels; ++c) {
    row += probs[i * channels + c] * a[c];
    grad_row[c] = (a[c] - b[c]) * inv_n2;
  }
  return row;
}

inline void mlp_pixel(const LocalizerParams& p, const double* f, double* prob, double* hidden) {
  for (int j = 0; j < kHiddenDim; ++j) {
    double a = p.b1[j];
    for (int i = 0; i < kFeatureDim; ++i) a += p.w1[j * kFeatureDim + i] * f[i];
    hidden[j] = std::tanh(a);
  }
  double z[kChannels];
  for (int c = 0; c < kChannels; ++c) {
    double a = p.b2[c];
    for (int j = 0; j < kHiddenDim; ++j) a += p.w2[c * kHiddenDim + j] * hidden[j];
    z[c] = a;
  }
  const double m = std::max(z[0], z[1]);
  const double e0 = std::exp(z[0] - m);
  const double e1 = std::exp(z[1] - m);
  const double s = e0 + e1;
  prob[0] = e0 / s;
  prob[1] = e1 / s;
}

void check_mlp_args(std::span<const double> features, std::span<double> probs, std::span<double> hidden) {
  const std::size_t n = features.size() / kFeatureDim;
  if (features.size() % kFeatureDim != 0 || probs.size() != n * kChannels || hidden.size() != n * kHiddenDim) {
    fail(ErrorKind::InvalidInput, "mlp_forward: inconsistent dimensions");
  }
}

}  // namespace

namespace serial {

void separable_blur(std::span<const float> in, std::span<float> out, int height, int width, int channels,
                    std::span<const double> taps) {
  check_blur_args(in, out, height, width, channels, taps);
  const int radius = static_cast<int>(taps.size() / 2);
  std::vector<double> tmp(in.size());
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < channels; ++c)
        tmp[(static_cast<std::size_t>(y) * width + x) * channels + c] =
            blur_h(in, y, x, c, width, channels, taps, radius);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < channels; ++c)
        out[(static_cast<std::size_t>(y) * width + x) * channels + c] =
            static_cast<float>(blur_v(tmp, y, x, c, height, width, channels, taps, radius));
}

PottsResult dense_potts(std::span<const double> features, int dim, std::span<const double> probs, int channels) {
  check_potts_args(features, dim, probs, channels);
  const std::size_t n = features.size() / dim;
  PottsResult r;
  r.grad.assign(n * channels, 0.0);
  std::vector<double> a(channels), b(channels);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += potts_row(i, n, features, dim, probs, channels, r.grad.data() + i * channels, a.data(), b.data());
  }
  r.value = total / (static_cast<double>(n) * static_cast<double>(n));
  return r;
}

void mlp_forward(const LocalizerParams& params, std::span<const double> features, std::span<double> probs,
                 std::span<double> hidden) {
  check_mlp_args(features, probs, hidden);
  const std::size_t n = features.size() / kFeatureDim;
  for (std::size_t p = 0; p < n; ++p) {
    mlp_pixel(params, features.data() + p * kFeatureDim, probs.data() + p * kChannels,
              hidden.data() + p * kHiddenDim);
  }
}

}  // namespace serial

namespace parallel {

void separable_blur(std::span<const float> in, std::span<float> out, int height, int width, int channels,
                    std::span<const double> taps) {
  check_blur_args(in, out, height, width, channels, taps);
  const int radius = static_cast<int>(taps.size() / 2);
  std::vector<double> tmp(in.size());
#pragma omp parallel for schedule(static)
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < channels; ++c)
        tmp[(static_cast<std::size_t>(y) * width + x) * channels + c] =
            blur_h(in, y, x, c, width, channels, taps, radius);
  }
#pragma omp parallel for schedule(static)
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < channels; ++c)
        out[(static_cast<std::size_t>(y) * width + x) * channels + c] =
            static_cast<float>(blur_v(tmp, y, x, c, height, width, channels, taps, radius));
  }
}

PottsResult dense_potts(std::span<const double> features, int dim, std::span<const double> probs, int channels) {
  check_potts_args(features, dim, probs, channels);
  const std::size_t n = features.size() / dim;
  PottsResult r;
  r.grad.assign(n * channels, 0.0);
  // Row energies land in their own slots and are summed serially afterwards,
  // keeping the total independent of the thread count.
  std::vector<double> rows(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel
  {
    std::vector<double> a(channels), b(channels);
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      const auto u = static_cast<std::size_t>(i);
      rows[u] = potts_row(u, n, features, dim, probs, channels, r.grad.data() + u * channels, a.data(), b.data());
    }
  }
  double total = 0.0;
  for (double v : rows) total += v;
  r.value = total / (static_cast<double>(n) * static_cast<double>(n));
  return r;
}

void mlp_forward(const LocalizerParams& params, std::span<const double> features, std::span<double> probs,
                 std::span<double> hidden) {
  check_mlp_args(features, probs, hidden);
  const auto n = static_cast<std::ptrdiff_t>(features.size() / kFeatureDim);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < n; ++p) {
    mlp_pixel(params, features.data() + p * kFeatureDim, probs.data() + p * kChannels,
              hidden.data() + p * kHiddenDim);
  }
}

}  // namespace parallel

#ifdef WSOL_HAVE_OPENMP
namespace active = parallel;
#else
namespace active = serial;
#endif

void separable_blur(std::span<const float> in, std::span<float> out, int height, int width, int channels,
                    std::span<const double> taps) {
  active::separable_blur(in, out, height, width, channels, taps);
}

PottsResult dense_potts(std::span<const double> features, int dim, std::span<const double> probs, int channels) {
  return active::dense_potts(features, dim, probs, channels);
}

void mlp_forward(const LocalizerParams& params, std::span<const double> features, std::span<double> probs,
                 std::span<double> hidden) {
  active::mlp_forward(params, features, probs, hidden);
}

}  // namespace wsol::kernels
