#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "wsol/localizer.hpp"
#include "wsol/losses.hpp"
#include "wsol/pseudolabel.hpp"

namespace wsol {

struct TrainHyper {
  double lr = 0.05;
  int steps = 500;
  double lambda_crf = 1e-4;
  double lambda_class = 0.0;
  std::uint64_t seed = 0;
  CrfParams crf;
  int subsample_k = 0;  ///< > 0 draws a fresh k-subset of each label set every step
};

struct TrainingExample {
  std::string image_id;
  Tensor image;      // [H,W,3]
  Tensor attention;  // [H,W], the selected candidate map
  PseudoLabels labels;
  int class_id = 0;
};

struct TrainStep {
  int step = 0;
  double total = 0.0;
  double ce = 0.0;
  double crf = 0.0;    ///< 0 when lambda_crf == 0 (not evaluated)
  double cls = 0.0;    ///< 0 when lambda_class == 0 (not evaluated)
};

struct TrainResult {
  LocalizerParams params;
  std::vector<TrainStep> trace;
};

/// Plain SGD, one image per step, visiting images in a seeded order that is
/// reshuffled every pass. Examples with empty label sets are skipped.
/// Throws InvalidDataset when nothing is trainable and Numeric on a non-finite loss.
TrainResult train_localizer(std::span<const TrainingExample> examples, const TrainHyper& hyper, int n_classes);

inline constexpr const char* kLossTraceHeader = "step,loss_total,loss_ce,loss_crf,loss_class";

void write_loss_trace(const std::vector<TrainStep>& trace, const std::filesystem::path& csv_path);

}  // namespace wsol
