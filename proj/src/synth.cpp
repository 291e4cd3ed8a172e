#include "wsol/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>

#include "wsol/attention.hpp"
#include "wsol/error.hpp"
#include "wsol/kernels.hpp"
#include "wsol/rng.hpp"
#include "wsol/tensor.hpp"

namespace wsol {

void SynthConfig::validate() const {
  if (n_images < 0) fail(ErrorKind::InvalidParam, "n_images must be >= 0");
  if (height < 16 || width < 16) fail(ErrorKind::InvalidParam, "image size must be >= 16x16");
  if (n_classes < 2) fail(ErrorKind::InvalidParam, "n_classes must be >= 2");
  if (n_heads < kMinHeads) fail(ErrorKind::InvalidParam, "n_heads must be >= 5");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) fail(ErrorKind::InvalidParam, "noise_sigma must be >= 0");
  if (!(distractor_prob >= 0.0 && distractor_prob <= 1.0)) {
    fail(ErrorKind::InvalidParam, "distractor_prob must be in [0,1]");
  }
  if (attention_stride < 1 || attention_stride > std::min(height, width) / 2) {
    fail(ErrorKind::InvalidParam, "attention_stride out of range");
  }
}

namespace {

using Plane = std::vector<double>;

// Coarse uniform lattice resampled to (h, w): cheap smooth noise in [lo, hi].
Plane smooth_noise(Rng& rng, int h, int w, int cells, double lo, double hi) {
  std::vector<float> coarse(static_cast<std::size_t>(cells) * cells);
  for (auto& v : coarse) v = static_cast<float>(rng.uniform(lo, hi));
  const auto cs = static_cast<std::size_t>(cells);
  const Tensor up = upsample_bilinear(Tensor::f32({cs, cs}, std::move(coarse)), h, w);
  const auto d = up.f32_data();
  return {d.begin(), d.end()};
}

std::array<double, 3> palette(int cls, int n_classes) {
  // HSV with s = 0.85, v = 0.9.
  const double hue = 6.0 * cls / n_classes;
  const int sector = static_cast<int>(hue) % 6;
  const double f = hue - std::floor(hue);
  const double v = 0.9, s = 0.85;
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  switch (sector) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

Plane blur_plane(const Plane& in, int h, int w, double sigma) {
  std::vector<float> src(in.begin(), in.end());
  std::vector<float> dst(src.size());
  const auto taps = kernels::gaussian_taps(sigma);
  kernels::separable_blur(src, dst, h, w, 1, taps);
  return {dst.begin(), dst.end()};
}

std::string image_id(int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "img_%05d", i);
  return buf;
}

}  // namespace

DatasetManifest generate_synthetic(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) fail(ErrorKind::Io, "cannot create " + out_dir.string());

  DatasetManifest manifest;
  manifest.root = out_dir;
  const int H = cfg.height, W = cfg.width, S = cfg.attention_stride;
  const int ah = (H + S - 1) / S, aw = (W + S - 1) / S;
  const auto hw = static_cast<std::size_t>(H) * W;
  const auto ahw = static_cast<std::size_t>(ah) * aw;

  if (cfg.n_images > 0) {
    std::filesystem::create_directories(out_dir / "images", ec);
    std::filesystem::create_directories(out_dir / "attention", ec);
    if (ec) fail(ErrorKind::Io, "cannot create dataset subdirectories in " + out_dir.string());
  }

  Rng rng(cfg.rng_seed);
  for (int i = 0; i < cfg.n_images; ++i) {
    const int cls = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.n_classes)));
    const bool ellipse = cls % 2 == 1;
    const auto color = palette(cls, cfg.n_classes);

    // Background: smooth gray level plus a faint smooth per-channel tint.
    const Plane base = smooth_noise(rng, H, W, 4, 0.25, 0.7);
    std::array<Plane, 3> tint;
    for (auto& t : tint) t = smooth_noise(rng, H, W, 3, -0.06, 0.06);

    // Object extent, kept one pixel clear of every border.
    const int bw = rng.between(static_cast<int>(0.3 * W), static_cast<int>(0.6 * W));
    const int bh = rng.between(static_cast<int>(0.3 * H), static_cast<int>(0.6 * H));
    const int ox = rng.between(1, W - 1 - bw);
    const int oy = rng.between(1, H - 1 - bh);
    std::vector<std::uint8_t> mask(hw, 0);
    BBox gt{W, H, 0, 0};
    for (int y = oy; y < oy + bh; ++y) {
      for (int x = ox; x < ox + bw; ++x) {
        bool inside = true;
        if (ellipse) {
          const double dx = (x + 0.5 - ox - bw / 2.0) / (bw / 2.0);
          const double dy = (y + 0.5 - oy - bh / 2.0) / (bh / 2.0);
          inside = dx * dx + dy * dy <= 1.0;
        }
        if (!inside) continue;
        mask[static_cast<std::size_t>(y) * W + x] = 1;
        gt = {std::min(gt.x0, x), std::min(gt.y0, y), std::max(gt.x1, x + 1), std::max(gt.y1, y + 1)};
      }
    }

    std::vector<float> image(hw * 3);
    for (std::size_t p = 0; p < hw; ++p) {
      for (int c = 0; c < 3; ++c) {
        const double v = mask[p] ? color[c] + rng.normal(0.0, 0.03) : base[p] + tint[c][p] + rng.normal(0.0, 0.02);
        image[3 * p + c] = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }

    // Object mask at attention resolution (cell averages), then softened.
    Plane coarse_mask(ahw, 0.0);
    for (int y = 0; y < ah; ++y) {
      for (int x = 0; x < aw; ++x) {
        int n = 0, on = 0;
        for (int yy = y * S; yy < std::min(H, (y + 1) * S); ++yy)
          for (int xx = x * S; xx < std::min(W, (x + 1) * S); ++xx, ++n) on += mask[static_cast<std::size_t>(yy) * W + xx];
        coarse_mask[static_cast<std::size_t>(y) * aw + x] = static_cast<double>(on) / n;
      }
    }
    const Plane soft_mask = blur_plane(coarse_mask, ah, aw, 1.0);

    const int distractor_head = rng.uniform() < cfg.distractor_prob ? static_cast<int>(rng.below(4)) : -1;
    std::vector<float> stack(static_cast<std::size_t>(cfg.n_heads) * ahw);
    for (int k = 0; k < cfg.n_heads; ++k) {
      Plane head(ahw);
      if (k < 4) {
        const double amp = rng.uniform(0.7, 1.0);
        const Plane clutter = smooth_noise(rng, ah, aw, 4, 0.0, 0.15);
        for (std::size_t p = 0; p < ahw; ++p) head[p] = amp * soft_mask[p] + clutter[p] + rng.normal(0.0, cfg.noise_sigma);
        if (k == distractor_head) {
          // Blob centred away from the object box, in attention cells.
          const double ocx = (ox + bw / 2.0) / S, ocy = (oy + bh / 2.0) / S;
          const double reach = 0.5 * std::hypot(bw, bh) / S;
          const double radius = rng.uniform(1.5, 3.0);
          double cx = 0, cy = 0;
          for (int attempt = 0; attempt < 50; ++attempt) {
            cx = rng.uniform(0.0, aw);
            cy = rng.uniform(0.0, ah);
            if (std::hypot(cx - ocx, cy - ocy) > reach + 2.0 * radius) break;
          }
          const double blob_amp = rng.uniform(0.6, 0.9);
          for (int y = 0; y < ah; ++y)
            for (int x = 0; x < aw; ++x) {
              const double d2 = (x + 0.5 - cx) * (x + 0.5 - cx) + (y + 0.5 - cy) * (y + 0.5 - cy);
              head[static_cast<std::size_t>(y) * aw + x] += blob_amp * std::exp(-d2 / (2 * radius * radius));
            }
        }
      } else {
        const Plane field = smooth_noise(rng, ah, aw, 4, 0.0, 1.0);
        for (std::size_t p = 0; p < ahw; ++p) head[p] = field[p] + rng.normal(0.0, cfg.noise_sigma);
      }
      const auto normalized = normalize_minmax(head);
      std::copy(normalized.begin(), normalized.end(), stack.begin() + static_cast<std::ptrdiff_t>(k * ahw));
    }

    ManifestRecord rec;
    rec.image_id = image_id(i);
    rec.image_path = std::filesystem::path("images") / (rec.image_id + ".tnsr");
    rec.attention_path = std::filesystem::path("attention") / (rec.image_id + ".tnsr");
    rec.label = cls;
    rec.gt_boxes = {gt};
    write_tensor(Tensor::f32({static_cast<std::size_t>(H), static_cast<std::size_t>(W), 3}, std::move(image)),
                 out_dir / rec.image_path);
    write_tensor(Tensor::f32({static_cast<std::size_t>(cfg.n_heads), static_cast<std::size_t>(ah),
                              static_cast<std::size_t>(aw)},
                             std::move(stack)),
                 out_dir / rec.attention_path);
    manifest.records.push_back(std::move(rec));
  }
  write_manifest(manifest, out_dir / "manifest.csv");
  return manifest;
}

}  // namespace wsol
