#include "wsol/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wsol/error.hpp"
#include "wsol/kernels.hpp"

namespace wsol {

LossResult loss_partial_ce(const LocalizationMap& s, const PseudoLabels& labels) {
  const std::size_t n_labeled = labels.fg.size() + labels.bg.size();
  if (n_labeled == 0) fail(ErrorKind::InvalidLabels, "no labelled pixels");
  const auto n = static_cast<int>(s.pixels());
  LossResult r;
  r.grad.assign(s.probs.size(), 0.0);
  const double inv = 1.0 / static_cast<double>(n_labeled);
  double acc = 0.0;
  auto term = [&](int p, int channel) {
    if (p < 0 || p >= n) fail(ErrorKind::InvalidLabels, "pseudo-label pixel index out of range");
    const double prob = s.probs[static_cast<std::size_t>(p) * kChannels + channel];
    acc += std::log(prob);
    r.grad[static_cast<std::size_t>(p) * kChannels + channel] -= inv / prob;
  };
  for (int p : labels.fg) term(p, 1);
  for (int p : labels.bg) term(p, 0);
  r.value = -acc * inv;
  return r;
}

void CrfParams::validate() const {
  if (!(sigma_spatial > 0.0) || !(sigma_range > 0.0)) fail(ErrorKind::InvalidParam, "CRF sigmas must be > 0");
  if (grid_size < 2) fail(ErrorKind::InvalidParam, "CRF grid_size must be >= 2");
}

namespace {

std::vector<int> edges(int extent, int cells) {
  std::vector<int> e(cells + 1);
  for (int i = 0; i <= cells; ++i) e[i] = static_cast<int>(static_cast<long long>(i) * extent / cells);
  return e;
}

}  // namespace

CrfGrid make_crf_grid(const Tensor& image, const CrfParams& crf) {
  crf.validate();
  require_f32(image, 3, "CRF image");
  if (image.extent(2) != 3) fail(ErrorKind::InvalidInput, "CRF image must be [H,W,3]");
  CrfGrid g;
  g.height = static_cast<int>(image.extent(0));
  g.width = static_cast<int>(image.extent(1));
  g.grid_h = std::min(crf.grid_size, g.height);
  g.grid_w = std::min(crf.grid_size, g.width);
  g.row_edges = edges(g.height, g.grid_h);
  g.col_edges = edges(g.width, g.grid_w);
  g.features.resize(g.cells() * 5);
  const auto rgb = image.f32_data();
  for (int gy = 0; gy < g.grid_h; ++gy) {
    for (int gx = 0; gx < g.grid_w; ++gx) {
      double acc[3] = {0, 0, 0};
      int count = 0;
      for (int y = g.row_edges[gy]; y < g.row_edges[gy + 1]; ++y)
        for (int x = g.col_edges[gx]; x < g.col_edges[gx + 1]; ++x, ++count)
          for (int c = 0; c < 3; ++c) acc[c] += rgb[(static_cast<std::size_t>(y) * g.width + x) * 3 + c];
      double* f = g.features.data() + (static_cast<std::size_t>(gy) * g.grid_w + gx) * 5;
      f[0] = gx / crf.sigma_spatial;
      f[1] = gy / crf.sigma_spatial;
      for (int c = 0; c < 3; ++c) f[2 + c] = acc[c] / count / crf.sigma_range;
    }
  }
  return g;
}

LossResult loss_crf(const LocalizationMap& s, const CrfGrid& grid) {
  if (s.height != grid.height || s.width != grid.width) {
    fail(ErrorKind::InvalidInput, "CRF: map and image dimensions differ");
  }
  std::vector<double> pooled(grid.cells() * kChannels, 0.0);
  for (int gy = 0; gy < grid.grid_h; ++gy) {
    for (int gx = 0; gx < grid.grid_w; ++gx) {
      const std::size_t cell = static_cast<std::size_t>(gy) * grid.grid_w + gx;
      int count = 0;
      for (int y = grid.row_edges[gy]; y < grid.row_edges[gy + 1]; ++y)
        for (int x = grid.col_edges[gx]; x < grid.col_edges[gx + 1]; ++x, ++count)
          for (int c = 0; c < kChannels; ++c)
            pooled[cell * kChannels + c] += s.probs[(static_cast<std::size_t>(y) * s.width + x) * kChannels + c];
      for (int c = 0; c < kChannels; ++c) pooled[cell * kChannels + c] /= count;
    }
  }

  const auto potts = kernels::dense_potts(grid.features, 5, pooled, kChannels);

  LossResult r;
  r.value = potts.value;
  r.grad.assign(s.probs.size(), 0.0);
  for (int gy = 0; gy < grid.grid_h; ++gy) {
    for (int gx = 0; gx < grid.grid_w; ++gx) {
      const std::size_t cell = static_cast<std::size_t>(gy) * grid.grid_w + gx;
      const int count = (grid.row_edges[gy + 1] - grid.row_edges[gy]) * (grid.col_edges[gx + 1] - grid.col_edges[gx]);
      for (int y = grid.row_edges[gy]; y < grid.row_edges[gy + 1]; ++y)
        for (int x = grid.col_edges[gx]; x < grid.col_edges[gx + 1]; ++x)
          for (int c = 0; c < kChannels; ++c)
            r.grad[(static_cast<std::size_t>(y) * s.width + x) * kChannels + c] =
                potts.grad[cell * kChannels + c] / count;
    }
  }
  return r;
}

LossResult loss_crf(const LocalizationMap& s, const Tensor& image, const CrfParams& crf) {
  return loss_crf(s, make_crf_grid(image, crf));
}

LossResult potts_energy_explicit(std::span<const double> affinity, std::span<const double> probs, int channels) {
  if (channels < 1 || probs.size() % channels != 0) fail(ErrorKind::InvalidInput, "potts: bad channel count");
  const std::size_t n = probs.size() / channels;
  if (affinity.size() != n * n) fail(ErrorKind::InvalidInput, "potts: affinity must be N x N");
  const double inv_n2 = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  LossResult r;
  r.grad.assign(probs.size(), 0.0);
  double total = 0.0;
  for (int c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double w = affinity[i * n + j];
        const double si = probs[i * channels + c];
        const double sj = probs[j * channels + c];
        total += w * si * (1.0 - sj);
        r.grad[i * channels + c] += w * (1.0 - sj) * inv_n2;
        r.grad[j * channels + c] -= w * si * inv_n2;
      }
    }
  }
  r.value = total * inv_n2;
  return r;
}

ClassLossResult loss_class(const LocalizationMap& s, const PixelFeatures& features, int y,
                           std::span<const double> head, int n_classes) {
  if (n_classes < 1 || head.size() != static_cast<std::size_t>(n_classes) * kHeadInputs) {
    fail(ErrorKind::InvalidParam, "class head must be [n_classes, 7]");
  }
  if (y < 0 || y >= n_classes) fail(ErrorKind::InvalidParam, "class id out of range");
  if (features.pixels() != s.pixels()) fail(ErrorKind::InvalidInput, "class loss: feature/map size mismatch");

  const std::size_t n = s.pixels();
  double mass = 0.0;
  double g[kHeadInputs] = {0, 0, 0, 0, 0, 0, 1.0};
  for (std::size_t p = 0; p < n; ++p) {
    const double w = s.fg(p);
    mass += w;
    const auto f = features.at(p);
    for (int k = 0; k < kFeatureDim; ++k) g[k] += w * f[k];
  }
  if (mass < 1e-12) fail(ErrorKind::DegeneratePooling, "foreground mass is zero");
  for (int k = 0; k < kFeatureDim; ++k) g[k] /= mass;

  std::vector<double> prob(n_classes);
  double m = -INFINITY;
  for (int c = 0; c < n_classes; ++c) {
    double z = 0.0;
    for (int k = 0; k < kHeadInputs; ++k) z += head[c * kHeadInputs + k] * g[k];
    prob[c] = z;
    m = std::max(m, z);
  }
  double sum = 0.0;
  for (auto& v : prob) sum += (v = std::exp(v - m));
  for (auto& v : prob) v /= sum;

  ClassLossResult r;
  r.value = -std::log(prob[y]);
  r.grad_head.assign(head.size(), 0.0);
  double dg[kFeatureDim] = {};
  for (int c = 0; c < n_classes; ++c) {
    const double dz = prob[c] - (c == y ? 1.0 : 0.0);
    for (int k = 0; k < kHeadInputs; ++k) r.grad_head[c * kHeadInputs + k] = dz * g[k];
    for (int k = 0; k < kFeatureDim; ++k) dg[k] += head[c * kHeadInputs + k] * dz;
  }
  // dg/dS_p^fg = (f_p - g) / mass
  r.grad_probs.assign(s.probs.size(), 0.0);
  for (std::size_t p = 0; p < n; ++p) {
    const auto f = features.at(p);
    double acc = 0.0;
    for (int k = 0; k < kFeatureDim; ++k) acc += dg[k] * (f[k] - g[k]);
    r.grad_probs[p * kChannels + 1] = acc / mass;
  }
  return r;
}

}  // namespace wsol
