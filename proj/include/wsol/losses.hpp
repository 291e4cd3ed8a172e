#pragma once

#include <span>
#include <vector>

#include "wsol/localizer.hpp"
#include "wsol/pseudolabel.hpp"
#include "wsol/tensor.hpp"

namespace wsol {

/// Loss value with its gradient with respect to the probability map, laid out
/// like LocalizationMap::probs ([H*W, 2]).
struct LossResult {
  double value = 0.0;
  std::vector<double> grad;
};

/// Cross-entropy over labelled pixels only, averaged over |fg| + |bg|.
/// Throws InvalidLabels when both sets are empty or out of range.
LossResult loss_partial_ce(const LocalizationMap& s, const PseudoLabels& labels);

struct CrfParams {
  double sigma_spatial = 8.0;  ///< pooled-grid cells
  double sigma_range = 0.1;    ///< RGB units
  int grid_size = 32;

  void validate() const;  ///< throws InvalidParam
};

/// Image side of the CRF term, pooled once per image: per-cell features
/// [x/sigma_s, y/sigma_s, r/sigma_r, g/sigma_r, b/sigma_r] plus the cell layout.
struct CrfGrid {
  int height = 0;  // source image
  int width = 0;
  int grid_h = 0;  // pooled extents, min(grid_size, H) by min(grid_size, W)
  int grid_w = 0;
  std::vector<int> row_edges;  // grid_h + 1 entries
  std::vector<int> col_edges;  // grid_w + 1 entries
  std::vector<double> features;  // [grid_h * grid_w, 5]

  std::size_t cells() const noexcept { return static_cast<std::size_t>(grid_h) * grid_w; }
};

CrfGrid make_crf_grid(const Tensor& image, const CrfParams& crf);

/// Average-pools S to the grid, evaluates the dense Gaussian-affinity relaxed
/// Potts energy (1/N^2) sum_c sum_{i!=j} W_ij S_i^c (1 - S_j^c) and routes the
/// gradient back through the pooling.
LossResult loss_crf(const LocalizationMap& s, const CrfGrid& grid);
LossResult loss_crf(const LocalizationMap& s, const Tensor& image, const CrfParams& crf);

/// The same energy for an explicit N x N affinity matrix (diagonal ignored) and
/// probabilities [N, channels]. Used as the direct-summation reference.
LossResult potts_energy_explicit(std::span<const double> affinity, std::span<const double> probs, int channels);

struct ClassLossResult {
  double value = 0.0;
  std::vector<double> grad_probs;  // [H*W, 2]; only the foreground channel is nonzero
  std::vector<double> grad_head;   // [n_classes, 7]
};

/// Foreground-weighted average feature g, logits = head * [g; 1], cross-entropy
/// against class y. Throws DegeneratePooling when the foreground mass < 1e-12.
ClassLossResult loss_class(const LocalizationMap& s, const PixelFeatures& features, int y,
                           std::span<const double> head, int n_classes);

}  // namespace wsol
