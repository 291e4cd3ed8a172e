#include "wsol/scorer.hpp"

#include <algorithm>
#include <cmath>

#include "wsol/csv.hpp"
#include "wsol/error.hpp"

namespace wsol {

std::vector<double> toy_features(const Tensor& image) {
  require_f32(image, 3, "toy_features");
  const int h = static_cast<int>(image.extent(0));
  const int w = static_cast<int>(image.extent(1));
  if (image.extent(2) != 3 || h < kToyGrid || w < kToyGrid) {
    fail(ErrorKind::InvalidInput, "toy_features expects [H,W,3] with H,W >= 8");
  }
  const auto d = image.f32_data();
  std::vector<double> f(kToyFeatures, 0.0);
  for (int gy = 0; gy < kToyGrid; ++gy) {
    const int y0 = gy * h / kToyGrid, y1 = (gy + 1) * h / kToyGrid;
    for (int gx = 0; gx < kToyGrid; ++gx) {
      const int x0 = gx * w / kToyGrid, x1 = (gx + 1) * w / kToyGrid;
      double acc = 0.0;
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
          const std::size_t p = (static_cast<std::size_t>(y) * w + x) * 3;
          acc += (static_cast<double>(d[p]) + d[p + 1] + d[p + 2]) / 3.0;
        }
      f[gy * kToyGrid + gx] = acc / ((y1 - y0) * (x1 - x0));
    }
  }
  const std::size_t n = static_cast<std::size_t>(h) * w;
  for (std::size_t p = 0; p < n; ++p)
    for (int c = 0; c < 3; ++c) f[kToyGrid * kToyGrid + c] += d[3 * p + c];
  for (int c = 0; c < 3; ++c) f[kToyGrid * kToyGrid + c] /= static_cast<double>(n);
  return f;
}

namespace {

constexpr int kStride = kToyFeatures + 1;

void softmax_logits(const std::vector<double>& w, int n_classes, const double* x, double* out) {
  double m = -INFINITY;
  for (int c = 0; c < n_classes; ++c) {
    double z = w[c * kStride + kToyFeatures];
    for (int i = 0; i < kToyFeatures; ++i) z += w[c * kStride + i] * x[i];
    out[c] = z;
    m = std::max(m, z);
  }
  double s = 0.0;
  for (int c = 0; c < n_classes; ++c) {
    out[c] = std::exp(out[c] - m);
    s += out[c];
  }
  for (int c = 0; c < n_classes; ++c) out[c] /= s;
}

}  // namespace

ToyScorer::ToyScorer(int n_classes, std::vector<double> weights) : n_classes_(n_classes), weights_(std::move(weights)) {
  if (n_classes_ < 1 || weights_.size() != static_cast<std::size_t>(n_classes_) * kStride) {
    fail(ErrorKind::InvalidParam, "toy scorer weights have the wrong shape");
  }
}

std::vector<double> ToyScorer::probabilities(const std::vector<double>& features) const {
  if (features.size() != kToyFeatures) fail(ErrorKind::InvalidInput, "toy scorer expects 67 features");
  std::vector<double> p(n_classes_);
  softmax_logits(weights_, n_classes_, features.data(), p.data());
  return p;
}

std::vector<double> ToyScorer::score(std::string_view, std::size_t, const Tensor& image) const {
  return probabilities(toy_features(image));
}

ToyScorer toy_scorer_fit(const std::vector<std::pair<Tensor, int>>& examples, std::uint64_t, ToyScorerOptions opts) {
  int n_classes = 0;
  std::vector<int> seen;
  for (const auto& [img, label] : examples) {
    if (label < 0) fail(ErrorKind::InvalidDataset, "negative class label");
    n_classes = std::max(n_classes, label + 1);
    if (std::find(seen.begin(), seen.end(), label) == seen.end()) seen.push_back(label);
  }
  if (seen.size() < 2) fail(ErrorKind::InvalidDataset, "toy scorer needs at least two classes");

  const std::size_t n = examples.size();
  std::vector<double> x(n * kToyFeatures);
  for (std::size_t i = 0; i < n; ++i) {
    const auto f = toy_features(examples[i].first);
    std::copy(f.begin(), f.end(), x.begin() + static_cast<std::ptrdiff_t>(i * kToyFeatures));
  }

  std::vector<double> w(static_cast<std::size_t>(n_classes) * kStride, 0.0);
  std::vector<double> grad(w.size());
  std::vector<double> p(n_classes);
  for (int step = 0; step < opts.steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* xi = x.data() + i * kToyFeatures;
      softmax_logits(w, n_classes, xi, p.data());
      for (int c = 0; c < n_classes; ++c) {
        const double r = p[c] - (c == examples[i].second ? 1.0 : 0.0);
        for (int k = 0; k < kToyFeatures; ++k) grad[c * kStride + k] += r * xi[k];
        grad[c * kStride + kToyFeatures] += r;
      }
    }
    const double scale = opts.lr / static_cast<double>(n);
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= scale * grad[k];
  }
  return ToyScorer(n_classes, std::move(w));
}

ToyScorer toy_scorer_fit(const DatasetManifest& manifest, std::uint64_t rng_seed, ToyScorerOptions opts) {
  std::vector<std::pair<Tensor, int>> examples;
  examples.reserve(manifest.records.size());
  for (const auto& r : manifest.records) examples.emplace_back(read_tensor(manifest.resolve(r.image_path)), r.label);
  return toy_scorer_fit(examples, rng_seed, opts);
}

double toy_scorer_accuracy(const ToyScorer& scorer, const std::vector<std::pair<Tensor, int>>& examples) {
  if (examples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& [img, label] : examples) {
    const auto p = scorer.probabilities(toy_features(img));
    const auto best = std::max_element(p.begin(), p.end()) - p.begin();
    correct += best == label ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

PrecomputedScorer PrecomputedScorer::load(const std::filesystem::path& csv_path) {
  PrecomputedScorer s;
  std::map<std::pair<std::string, std::size_t>, std::map<int, double>> raw;
  for (const auto& row : csv::read(csv_path, kScoresHeader)) {
    const auto index = csv::parse_int(row[1], "proposal_index");
    const auto cls = csv::parse_int(row[2], "class_id");
    if (index < 0 || cls < 0) fail(ErrorKind::Format, "scores CSV: negative index or class");
    const double v = csv::parse_double(row[3], "score");
    if (!std::isfinite(v)) fail(ErrorKind::Format, "scores CSV: non-finite score");
    auto& slot = raw[{row[0], static_cast<std::size_t>(index)}];
    if (!slot.emplace(static_cast<int>(cls), v).second) fail(ErrorKind::Format, "scores CSV: duplicate row");
    s.n_classes_ = std::max(s.n_classes_, static_cast<int>(cls) + 1);
  }
  for (auto& [key, by_class] : raw) {
    std::vector<double> v(s.n_classes_, 0.0);
    if (static_cast<int>(by_class.size()) != s.n_classes_) {
      fail(ErrorKind::Format, "scores CSV: '" + key.first + "' proposal " + std::to_string(key.second) +
                                  " does not list every class");
    }
    for (auto [c, score] : by_class) v[c] = score;
    s.table_.emplace(key, std::move(v));
  }
  return s;
}

std::vector<double> PrecomputedScorer::score(std::string_view image_id, std::size_t proposal_index,
                                             const Tensor&) const {
  auto it = table_.find({std::string(image_id), proposal_index});
  if (it == table_.end()) {
    fail(ErrorKind::InvalidInput, "no precomputed scores for '" + std::string(image_id) + "' proposal " +
                                      std::to_string(proposal_index));
  }
  return it->second;
}

}  // namespace wsol
