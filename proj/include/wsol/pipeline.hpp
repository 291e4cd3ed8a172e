#pragma once

// Glue between the per-image stages, shared by the CLI and the acceptance suite.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wsol/dataset.hpp"
#include "wsol/localizer.hpp"
#include "wsol/metrics.hpp"
#include "wsol/proposal.hpp"
#include "wsol/pseudolabel.hpp"
#include "wsol/scorer.hpp"
#include "wsol/trainer.hpp"

namespace wsol {

struct LoadedImage {
  Tensor image;  // [H,W,3]
  Tensor stack;  // [K,h,w]
};

LoadedImage load_record(const DatasetManifest& manifest, const ManifestRecord& record);

/// Candidate `source_map` of the stack, resampled to the image size.
Tensor candidate_at(const Tensor& stack, int source_map, int height, int width);

/// Raw-attention baseline score map: the mean-of-heads candidate at image size.
Tensor baseline_attention_map(const LoadedImage& loaded);

/// Foreground channel of the localizer on (image, attention).
Tensor localize(const LocalizerParams& params, const Tensor& image, const Tensor& attention);

struct ProposalSummary {
  BBox box;
  int source_map = 0;
};

struct ImageSelection {
  std::string image_id;
  std::vector<ProposalSummary> proposals;
  std::vector<std::vector<double>> scores;  ///< per proposal, per class
  std::optional<Proposal> selected;         ///< empty when every candidate map is degenerate
};

/// Candidates, boxes, blur composites and scoring for every manifest image,
/// in manifest order (parallel over images when threads > 1).
std::vector<ImageSelection> run_proposal_stage(const DatasetManifest& manifest, const Scorer& scorer,
                                               const ProposalOptions& opts);

inline constexpr const char* kAllProposalsHeader = "image_id,proposal_index,source_map,x0,y0,x1,y1";
inline constexpr const char* kSelectedHeader = "image_id,x0,y0,x1,y1,source_map,class_id,confidence";

void write_all_proposals(const std::vector<ImageSelection>& stage, const std::filesystem::path& csv_path);
void write_scores(const std::vector<ImageSelection>& stage, const std::filesystem::path& csv_path);
void write_selected(const std::vector<ImageSelection>& stage, const std::filesystem::path& csv_path);

/// A selected proposal as stored on disk (the attention map is rebuilt on demand).
struct SelectedRow {
  std::string image_id;
  BBox box;
  int source_map = 0;
  int class_id = 0;
  double confidence = 0.0;
};

std::vector<SelectedRow> read_selected(const std::filesystem::path& csv_path);

/// Rehydrates a Proposal from its CSV row and the image's attention stack.
Proposal proposal_from_row(const SelectedRow& row, const LoadedImage& loaded);

/// Training examples from selected proposals and their pseudo-labels, in manifest order.
std::vector<TrainingExample> assemble_training_set(const DatasetManifest& manifest,
                                                   const std::vector<SelectedRow>& selected,
                                                   const std::vector<LabeledImage>& labels);

enum class ScoreSource { Localizer, BaselineAttention };

/// Score maps for evaluation. With the localizer, the attention input is the
/// selected proposal's map when `selected` lists the image, else the
/// mean-of-heads candidate. The baseline is always the mean-of-heads candidate.
std::vector<EvalRecord> build_eval_records(const DatasetManifest& manifest, ScoreSource source,
                                           const LocalizerParams* params,
                                           const std::vector<SelectedRow>* selected = nullptr);

}  // namespace wsol
