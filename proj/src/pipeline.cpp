#include "wsol/pipeline.hpp"

#include <exception>
#include <unordered_map>

#include "wsol/attention.hpp"
#include "wsol/csv.hpp"
#include "wsol/error.hpp"

namespace wsol {
namespace {

// Exceptions cannot cross an OpenMP region; per-image failures are parked and
// the first one in manifest order is rethrown afterwards.
void rethrow_first(const std::vector<std::exception_ptr>& errors) {
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

LoadedImage load_record(const DatasetManifest& manifest, const ManifestRecord& record) {
  LoadedImage l{read_tensor(manifest.resolve(record.image_path)), read_tensor(manifest.resolve(record.attention_path))};
  require_f32(l.image, 3, "image");
  require_f32(l.stack, 3, "attention stack");
  if (l.image.extent(2) != 3) fail(ErrorKind::Format, "image '" + record.image_id + "' is not [H,W,3]");
  return l;
}

Tensor candidate_at(const Tensor& stack, int source_map, int height, int width) {
  if (source_map < 0 || source_map >= kNumCandidates) fail(ErrorKind::InvalidInput, "source_map must be 0..4");
  const CandidateMaps c = select_candidates(stack);
  return upsample_bilinear(c.maps[source_map], height, width);
}

Tensor baseline_attention_map(const LoadedImage& loaded) {
  return candidate_at(loaded.stack, kNumCandidates - 1, static_cast<int>(loaded.image.extent(0)),
                      static_cast<int>(loaded.image.extent(1)));
}

Tensor localize(const LocalizerParams& params, const Tensor& image, const Tensor& attention) {
  return forward(params, make_features(image, attention)).foreground();
}

std::vector<ImageSelection> run_proposal_stage(const DatasetManifest& manifest, const Scorer& scorer,
                                               const ProposalOptions& opts) {
  const auto n = static_cast<std::ptrdiff_t>(manifest.records.size());
  std::vector<ImageSelection> out(manifest.records.size());
  std::vector<std::exception_ptr> errors(manifest.records.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& rec = manifest.records[static_cast<std::size_t>(i)];
    auto& sel = out[static_cast<std::size_t>(i)];
    sel.image_id = rec.image_id;
    try {
      const LoadedImage loaded = load_record(manifest, rec);
      const ProposalSet set = make_proposals(loaded.image, select_candidates(loaded.stack), opts);
      for (std::size_t p = 0; p < set.proposals.size(); ++p) {
        sel.proposals.push_back({set.proposals[p].box, set.proposals[p].source_map});
        sel.scores.push_back(scorer.score(rec.image_id, p, set.proposals[p].image));
      }
      if (!set.proposals.empty()) {
        const auto [index, cls] = argmax_confidence(sel.scores);
        const auto& win = set.proposals[index];
        sel.selected = Proposal{win.box, win.source_map, cls, sel.scores[index][cls], index,
                                set.upsampled[win.source_map]};
      }
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  rethrow_first(errors);
  return out;
}

void write_all_proposals(const std::vector<ImageSelection>& stage, const std::filesystem::path& csv_path) {
  csv::Writer out(csv_path, kAllProposalsHeader);
  for (const auto& s : stage)
    for (std::size_t p = 0; p < s.proposals.size(); ++p) {
      const auto& b = s.proposals[p].box;
      out.row({s.image_id, std::to_string(p), std::to_string(s.proposals[p].source_map), std::to_string(b.x0),
               std::to_string(b.y0), std::to_string(b.x1), std::to_string(b.y1)});
    }
  out.close();
}

void write_scores(const std::vector<ImageSelection>& stage, const std::filesystem::path& csv_path) {
  csv::Writer out(csv_path, kScoresHeader);
  for (const auto& s : stage)
    for (std::size_t p = 0; p < s.scores.size(); ++p)
      for (std::size_t c = 0; c < s.scores[p].size(); ++c)
        out.row({s.image_id, std::to_string(p), std::to_string(c), csv::format(s.scores[p][c])});
  out.close();
}

void write_selected(const std::vector<ImageSelection>& stage, const std::filesystem::path& csv_path) {
  csv::Writer out(csv_path, kSelectedHeader);
  for (const auto& s : stage) {
    if (!s.selected) continue;
    const auto& p = *s.selected;
    out.row({s.image_id, std::to_string(p.box.x0), std::to_string(p.box.y0), std::to_string(p.box.x1),
             std::to_string(p.box.y1), std::to_string(p.source_map), std::to_string(p.class_id),
             csv::format(p.confidence)});
  }
  out.close();
}

std::vector<SelectedRow> read_selected(const std::filesystem::path& csv_path) {
  std::vector<SelectedRow> rows;
  for (const auto& f : csv::read(csv_path, kSelectedHeader)) {
    SelectedRow r;
    r.image_id = f[0];
    r.box = {static_cast<int>(csv::parse_int(f[1], "x0")), static_cast<int>(csv::parse_int(f[2], "y0")),
             static_cast<int>(csv::parse_int(f[3], "x1")), static_cast<int>(csv::parse_int(f[4], "y1"))};
    r.source_map = static_cast<int>(csv::parse_int(f[5], "source_map"));
    r.class_id = static_cast<int>(csv::parse_int(f[6], "class_id"));
    r.confidence = csv::parse_double(f[7], "confidence");
    if (r.source_map < 0 || r.source_map >= kNumCandidates) fail(ErrorKind::Format, "source_map must be 0..4");
    rows.push_back(std::move(r));
  }
  return rows;
}

Proposal proposal_from_row(const SelectedRow& row, const LoadedImage& loaded) {
  const int h = static_cast<int>(loaded.image.extent(0));
  const int w = static_cast<int>(loaded.image.extent(1));
  if (!row.box.valid_in(w, h)) fail(ErrorKind::Format, "selected box outside image '" + row.image_id + "'");
  Proposal p;
  p.box = row.box;
  p.source_map = row.source_map;
  p.class_id = row.class_id;
  p.confidence = row.confidence;
  p.attention = candidate_at(loaded.stack, row.source_map, h, w);
  return p;
}

std::vector<TrainingExample> assemble_training_set(const DatasetManifest& manifest,
                                                   const std::vector<SelectedRow>& selected,
                                                   const std::vector<LabeledImage>& labels) {
  std::unordered_map<std::string, const SelectedRow*> by_id;
  for (const auto& s : selected) by_id[s.image_id] = &s;
  std::unordered_map<std::string, const PseudoLabels*> label_by_id;
  for (const auto& l : labels) label_by_id[l.image_id] = &l.labels;

  std::vector<TrainingExample> out;
  for (const auto& rec : manifest.records) {
    auto s = by_id.find(rec.image_id);
    auto l = label_by_id.find(rec.image_id);
    if (s == by_id.end() || l == label_by_id.end()) continue;
    const LoadedImage loaded = load_record(manifest, rec);
    TrainingExample ex;
    ex.image_id = rec.image_id;
    ex.attention = proposal_from_row(*s->second, loaded).attention;
    ex.image = loaded.image;
    ex.labels = *l->second;
    ex.labels.height = static_cast<int>(ex.image.extent(0));
    ex.labels.width = static_cast<int>(ex.image.extent(1));
    ex.class_id = s->second->class_id;
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<EvalRecord> build_eval_records(const DatasetManifest& manifest, ScoreSource source,
                                           const LocalizerParams* params, const std::vector<SelectedRow>* selected) {
  if (source == ScoreSource::Localizer && params == nullptr) {
    fail(ErrorKind::InvalidParam, "localizer evaluation needs parameters");
  }
  std::unordered_map<std::string, const SelectedRow*> by_id;
  if (selected)
    for (const auto& s : *selected) by_id[s.image_id] = &s;

  std::vector<EvalRecord> records(manifest.records.size());
  std::vector<std::exception_ptr> errors(manifest.records.size());
  const auto n = static_cast<std::ptrdiff_t>(manifest.records.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& rec = manifest.records[static_cast<std::size_t>(i)];
    try {
      const LoadedImage loaded = load_record(manifest, rec);
      Tensor attention;
      auto it = by_id.find(rec.image_id);
      if (source == ScoreSource::Localizer && it != by_id.end()) {
        attention = proposal_from_row(*it->second, loaded).attention;
      } else {
        attention = baseline_attention_map(loaded);
      }
      Tensor map = source == ScoreSource::Localizer ? localize(*params, loaded.image, attention) : attention;
      records[static_cast<std::size_t>(i)] = {rec.image_id, std::move(map), rec.gt_boxes};
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  rethrow_first(errors);
  return records;
}

}  // namespace wsol
