#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "wsol/attention.hpp"
#include "wsol/box.hpp"
#include "wsol/scorer.hpp"
#include "wsol/segment.hpp"
#include "wsol/tensor.hpp"

namespace wsol {

/// Separable Gaussian blur of an [H,W,3] image: radius ceil(3 sigma), normalized
/// weights, clamp-to-edge borders, channels independent. Throws InvalidParam for sigma <= 0.
Tensor gaussian_blur(const Tensor& image, double sigma);

/// Blur sigma used when none is given: min(H, W) / 8.
double default_blur_sigma(int height, int width);

/// Original pixels inside `box`, blurred pixels outside.
Tensor composite(const Tensor& image, const Tensor& blurred, const BBox& box);

struct ProposalImage {
  Tensor image;  // [H,W,3]
  BBox box;
  int source_map = 0;
};

struct ProposalSet {
  std::vector<ProposalImage> proposals;
  std::array<Tensor, kNumCandidates> upsampled;  // candidate maps at image resolution
};

struct ProposalOptions {
  double min_area_frac = 0.0;
  double sigma = 0.0;  ///< <= 0 selects default_blur_sigma
  Connectivity connectivity = Connectivity::Eight;
};

/// One proposal per box of every candidate map, in candidate order then box order.
ProposalSet make_proposals(const Tensor& image, const CandidateMaps& candidates, const ProposalOptions& opts = {});

struct Proposal {
  BBox box;
  int source_map = 0;
  int class_id = 0;
  double confidence = 0.0;
  std::size_t proposal_index = 0;
  Tensor attention;  // selected candidate map at image resolution
};

/// Argmax over (proposal, class) of the scorer's confidence; ties go to the
/// earlier proposal, then the lower class id. Throws NoProposal when empty.
Proposal select_best(const ProposalSet& set, const Scorer& scorer, std::string_view image_id = {});

/// Index/class selection on a precomputed confidence table, same tie rules.
std::pair<std::size_t, int> argmax_confidence(const std::vector<std::vector<double>>& confidences);

}  // namespace wsol
