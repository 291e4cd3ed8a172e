#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wsol/dataset.hpp"
#include "wsol/tensor.hpp"

namespace wsol {

/// Classifier used to rank proposals. Implementations must be deterministic
/// and safe to share read-only across threads once built.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual int n_classes() const = 0;
  /// Per-class confidences for proposal `proposal_index` of `image_id`, whose
  /// composited image is `image` ([H,W,3]).
  virtual std::vector<double> score(std::string_view image_id, std::size_t proposal_index,
                                    const Tensor& image) const = 0;
};

inline constexpr int kToyGrid = 8;
inline constexpr int kToyFeatures = kToyGrid * kToyGrid + 3;  // 8x8 gray grid + mean RGB

/// 8x8 area-averaged grayscale grid followed by the mean RGB.
std::vector<double> toy_features(const Tensor& image);

struct ToyScorerOptions {
  double lr = 0.5;
  int steps = 300;
};

/// Multinomial logistic regression on toy_features, full-batch gradient descent
/// from zero weights. Weights are [n_classes, 68] with the bias last.
class ToyScorer final : public Scorer {
 public:
  ToyScorer(int n_classes, std::vector<double> weights);

  int n_classes() const override { return n_classes_; }
  std::vector<double> score(std::string_view image_id, std::size_t proposal_index,
                            const Tensor& image) const override;
  std::vector<double> probabilities(const std::vector<double>& features) const;
  const std::vector<double>& weights() const noexcept { return weights_; }

 private:
  int n_classes_;
  std::vector<double> weights_;
};

/// Fits on the manifest images with their labels. The seed is accepted for
/// interface stability; zero init with full-batch descent draws no randomness.
/// Throws InvalidDataset when fewer than two classes are present.
ToyScorer toy_scorer_fit(const DatasetManifest& manifest, std::uint64_t rng_seed, ToyScorerOptions opts = {});

/// Same fit from in-memory examples (image tensor, label).
ToyScorer toy_scorer_fit(const std::vector<std::pair<Tensor, int>>& examples, std::uint64_t rng_seed,
                         ToyScorerOptions opts = {});

double toy_scorer_accuracy(const ToyScorer& scorer, const std::vector<std::pair<Tensor, int>>& examples);

inline constexpr const char* kScoresHeader = "image_id,proposal_index,class_id,score";

/// Replays confidences from a scores CSV (e.g. produced by an external model).
class PrecomputedScorer final : public Scorer {
 public:
  static PrecomputedScorer load(const std::filesystem::path& csv_path);

  int n_classes() const override { return n_classes_; }
  /// Throws InvalidInput when the (image, proposal) pair has no complete row set.
  std::vector<double> score(std::string_view image_id, std::size_t proposal_index,
                            const Tensor& image) const override;

 private:
  int n_classes_ = 0;
  std::map<std::pair<std::string, std::size_t>, std::vector<double>> table_;
};

}  // namespace wsol
