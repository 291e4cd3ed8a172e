#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>

#include "wsol/csv.hpp"
#include "wsol/error.hpp"
#include "wsol/kernels.hpp"
#include "wsol/pipeline.hpp"
#include "wsol/synth.hpp"

namespace fs = std::filesystem;

namespace wsol::cli {
namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using RunConfig = std::map<std::string, std::string>;

std::string fmt(double v) { return csv::format(v); }

void prepare_out(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) fail(ErrorKind::Io, "cannot create output directory " + out.string());
}

Connectivity parse_connectivity(int c) {
  if (c == 4) return Connectivity::Four;
  if (c == 8) return Connectivity::Eight;
  throw UsageError("--connectivity must be 4 or 8");
}

// ---- synth ---------------------------------------------------------------

struct SynthArgs {
  fs::path out;
  SynthConfig cfg;
};

void add_synth(CLI::App& app, SynthArgs& a) {
  auto* sub = app.add_subcommand("synth", "Generate a seeded synthetic dataset");
  sub->add_option("--out", a.out, "Output directory")->required();
  sub->add_option("--n", a.cfg.n_images, "Number of images")->capture_default_str();
  sub->add_option("--seed", a.cfg.rng_seed, "RNG seed")->capture_default_str();
  sub->add_option("--height", a.cfg.height, "Image height")->capture_default_str();
  sub->add_option("--width", a.cfg.width, "Image width")->capture_default_str();
  sub->add_option("--classes", a.cfg.n_classes, "Number of classes")->capture_default_str();
  sub->add_option("--heads", a.cfg.n_heads, "Attention heads per image")->capture_default_str();
  sub->add_option("--noise", a.cfg.noise_sigma, "Per-head attention noise sigma")->capture_default_str();
  sub->add_option("--distractor", a.cfg.distractor_prob, "Probability of a distractor blob")->capture_default_str();
  sub->add_option("--attention-stride", a.cfg.attention_stride, "Image pixels per attention cell")
      ->capture_default_str();
}

int cmd_synth(const SynthArgs& a) {
  a.cfg.validate();
  prepare_out(a.out);
  const RunConfig rc = {{"command", "synth"},
                        {"out", a.out.string()},
                        {"n", std::to_string(a.cfg.n_images)},
                        {"seed", std::to_string(a.cfg.rng_seed)},
                        {"height", std::to_string(a.cfg.height)},
                        {"width", std::to_string(a.cfg.width)},
                        {"classes", std::to_string(a.cfg.n_classes)},
                        {"heads", std::to_string(a.cfg.n_heads)},
                        {"noise", fmt(a.cfg.noise_sigma)},
                        {"distractor", fmt(a.cfg.distractor_prob)},
                        {"attention_stride", std::to_string(a.cfg.attention_stride)}};
  const auto m = generate_synthetic(a.cfg, a.out);
  csv::write_key_values(a.out / "run_config.txt", rc);
  std::cout << "wrote " << m.records.size() << " images to " << a.out.string() << "\n";
  return kOk;
}

// ---- proposals -----------------------------------------------------------

struct ProposalArgs {
  fs::path manifest, out, scores, scorer_manifest;
  double sigma = 0.0;
  double min_area_frac = 0.0;
  int connectivity = 8;
  std::uint64_t scorer_seed = 0;
  int scorer_steps = 300;
  double scorer_lr = 0.5;
  int threads = 1;
  bool write_images = false;
};

void add_proposals(CLI::App& app, ProposalArgs& a) {
  auto* sub = app.add_subcommand("proposals", "Box proposals, blur composites, scoring and selection");
  sub->add_option("--manifest", a.manifest, "Dataset manifest CSV")->required();
  sub->add_option("--out", a.out, "Output directory")->required();
  sub->add_option("--sigma", a.sigma, "Blur sigma (<= 0: min(H,W)/8)")->capture_default_str();
  sub->add_option("--min-area-frac", a.min_area_frac, "Drop boxes smaller than this fraction of the image")
      ->capture_default_str();
  sub->add_option("--connectivity", a.connectivity, "Pixel connectivity (4 or 8)")->capture_default_str();
  sub->add_option("--scores", a.scores, "Precomputed scores CSV (image_id,proposal_index,class_id,score)");
  sub->add_option("--scorer-manifest", a.scorer_manifest, "Manifest to fit the toy scorer on (default: --manifest)");
  sub->add_option("--scorer-seed", a.scorer_seed, "Toy scorer seed")->capture_default_str();
  sub->add_option("--scorer-steps", a.scorer_steps, "Toy scorer gradient steps")->capture_default_str();
  sub->add_option("--scorer-lr", a.scorer_lr, "Toy scorer learning rate")->capture_default_str();
  sub->add_option("--threads", a.threads, "Worker threads")->capture_default_str();
  sub->add_flag("--write-images", a.write_images, "Also write every proposal image as TNSR");
}

int cmd_proposals(const ProposalArgs& a) {
  if (a.min_area_frac < 0.0 || a.min_area_frac > 1.0) throw UsageError("--min-area-frac must be in [0,1]");
  if (a.scorer_steps < 0 || !(a.scorer_lr > 0.0)) throw UsageError("toy scorer needs steps >= 0 and lr > 0");
  if (a.threads < 1) throw UsageError("--threads must be >= 1");
  ProposalOptions opts{a.min_area_frac, a.sigma, parse_connectivity(a.connectivity)};
  kernels::set_threads(a.threads);

  const DatasetManifest manifest = read_manifest(a.manifest);
  std::unique_ptr<Scorer> scorer;
  if (!a.scores.empty()) {
    scorer = std::make_unique<PrecomputedScorer>(PrecomputedScorer::load(a.scores));
  } else {
    const DatasetManifest fit_on = a.scorer_manifest.empty() ? manifest : read_manifest(a.scorer_manifest);
    scorer = std::make_unique<ToyScorer>(toy_scorer_fit(fit_on, a.scorer_seed, {a.scorer_lr, a.scorer_steps}));
  }

  prepare_out(a.out);
  const auto stage = run_proposal_stage(manifest, *scorer, opts);
  write_all_proposals(stage, a.out / "proposals_all.csv");
  write_scores(stage, a.out / "scores.csv");
  write_selected(stage, a.out / "proposals.csv");

  if (a.write_images) {
    const fs::path dir = a.out / "proposal_images";
    prepare_out(dir);
    for (const auto& rec : manifest.records) {
      const LoadedImage loaded = load_record(manifest, rec);
      const ProposalSet set = make_proposals(loaded.image, select_candidates(loaded.stack), opts);
      for (std::size_t p = 0; p < set.proposals.size(); ++p) {
        write_tensor(set.proposals[p].image, dir / (rec.image_id + "_" + std::to_string(p) + ".tnsr"));
      }
    }
  }

  csv::write_key_values(a.out / "run_config.txt",
                        {{"command", "proposals"},
                         {"manifest", a.manifest.string()},
                         {"out", a.out.string()},
                         {"scores", a.scores.string()},
                         {"scorer_manifest", a.scorer_manifest.string()},
                         {"sigma", fmt(a.sigma)},
                         {"min_area_frac", fmt(a.min_area_frac)},
                         {"connectivity", std::to_string(a.connectivity)},
                         {"scorer_seed", std::to_string(a.scorer_seed)},
                         {"scorer_steps", std::to_string(a.scorer_steps)},
                         {"scorer_lr", fmt(a.scorer_lr)},
                         {"threads", std::to_string(a.threads)},
                         {"write_images", a.write_images ? "1" : "0"}});

  const auto selected = std::count_if(stage.begin(), stage.end(), [](const auto& s) { return s.selected.has_value(); });
  for (const auto& s : stage)
    if (!s.selected) std::cerr << "warning: no proposal for " << s.image_id << " (all candidate maps degenerate)\n";
  std::cout << "selected proposals for " << selected << "/" << stage.size() << " images\n";
  return kOk;
}

// ---- pseudolabels --------------------------------------------------------

struct PseudoArgs {
  fs::path manifest, proposals, out;
  double n_frac = 0.1;
};

void add_pseudolabels(CLI::App& app, PseudoArgs& a) {
  auto* sub = app.add_subcommand("pseudolabels", "Sample foreground/background pseudo-pixels");
  sub->add_option("--manifest", a.manifest, "Dataset manifest CSV")->required();
  sub->add_option("--proposals", a.proposals, "Selected proposals CSV from `proposals`")->required();
  sub->add_option("--out", a.out, "Output directory")->required();
  sub->add_option("--n-frac", a.n_frac, "Fraction of pixels sampled on each side")->capture_default_str();
}

int cmd_pseudolabels(const PseudoArgs& a) {
  if (!(a.n_frac > 0.0 && a.n_frac <= 1.0)) throw UsageError("--n-frac must be in (0,1]");
  const DatasetManifest manifest = read_manifest(a.manifest);
  const auto selected = read_selected(a.proposals);
  std::vector<LabeledImage> out;
  for (const auto& row : selected) {
    const ManifestRecord* rec = manifest.find(row.image_id);
    if (!rec) fail(ErrorKind::InvalidDataset, "proposal for unknown image '" + row.image_id + "'");
    const Proposal prop = proposal_from_row(row, load_record(manifest, *rec));
    out.push_back({row.image_id, sample_pseudo_labels(prop, a.n_frac)});
  }
  prepare_out(a.out);
  write_pseudo_labels(out, a.out / "pseudolabels.csv");
  csv::write_key_values(a.out / "run_config.txt", {{"command", "pseudolabels"},
                                                   {"manifest", a.manifest.string()},
                                                   {"proposals", a.proposals.string()},
                                                   {"out", a.out.string()},
                                                   {"n_frac", fmt(a.n_frac)}});
  std::cout << "pseudo-labels for " << out.size() << " images\n";
  return kOk;
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
  fs::path manifest, proposals, pseudolabels, out;
  TrainHyper hyper;
};

void add_train(CLI::App& app, TrainArgs& a) {
  auto* sub = app.add_subcommand("train", "Train the two-channel localizer on pseudo-labels");
  sub->add_option("--manifest", a.manifest, "Dataset manifest CSV")->required();
  sub->add_option("--proposals", a.proposals, "Selected proposals CSV")->required();
  sub->add_option("--pseudolabels", a.pseudolabels, "Pseudo-label CSV")->required();
  sub->add_option("--out", a.out, "Output directory")->required();
  sub->add_option("--lr", a.hyper.lr, "SGD learning rate")->capture_default_str();
  sub->add_option("--steps", a.hyper.steps, "SGD steps (one image each)")->capture_default_str();
  sub->add_option("--lambda-crf", a.hyper.lambda_crf, "CRF loss weight")->capture_default_str();
  sub->add_option("--lambda-class", a.hyper.lambda_class, "Class loss weight")->capture_default_str();
  sub->add_option("--crf-sigma-spatial", a.hyper.crf.sigma_spatial, "CRF spatial sigma (grid cells)")
      ->capture_default_str();
  sub->add_option("--crf-sigma-range", a.hyper.crf.sigma_range, "CRF color sigma")->capture_default_str();
  sub->add_option("--crf-grid", a.hyper.crf.grid_size, "CRF pooled grid size")->capture_default_str();
  sub->add_option("--seed", a.hyper.seed, "Init and shuffle seed")->capture_default_str();
  sub->add_option("--subsample-k", a.hyper.subsample_k, "Per-step label subset size (0: off)")->capture_default_str();
}

int cmd_train(const TrainArgs& a) {
  if (a.hyper.steps < 0 || !(a.hyper.lr > 0.0)) throw UsageError("--steps must be >= 0 and --lr > 0");
  if (a.hyper.lambda_crf < 0.0 || a.hyper.lambda_class < 0.0) throw UsageError("loss weights must be >= 0");
  if (a.hyper.subsample_k < 0) throw UsageError("--subsample-k must be >= 0");
  try {
    a.hyper.crf.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const DatasetManifest manifest = read_manifest(a.manifest);
  const auto examples = assemble_training_set(manifest, read_selected(a.proposals), read_pseudo_labels(a.pseudolabels));
  const TrainResult result = train_localizer(examples, a.hyper, std::max(1, manifest.n_classes()));

  prepare_out(a.out);
  save_params(result.params, a.out / "checkpoint");
  write_loss_trace(result.trace, a.out / "loss_trace.csv");
  csv::write_key_values(a.out / "run_config.txt", {{"command", "train"},
                                                   {"manifest", a.manifest.string()},
                                                   {"proposals", a.proposals.string()},
                                                   {"pseudolabels", a.pseudolabels.string()},
                                                   {"out", a.out.string()},
                                                   {"lr", fmt(a.hyper.lr)},
                                                   {"steps", std::to_string(a.hyper.steps)},
                                                   {"lambda_crf", fmt(a.hyper.lambda_crf)},
                                                   {"lambda_class", fmt(a.hyper.lambda_class)},
                                                   {"crf_sigma_spatial", fmt(a.hyper.crf.sigma_spatial)},
                                                   {"crf_sigma_range", fmt(a.hyper.crf.sigma_range)},
                                                   {"crf_grid", std::to_string(a.hyper.crf.grid_size)},
                                                   {"seed", std::to_string(a.hyper.seed)},
                                                   {"subsample_k", std::to_string(a.hyper.subsample_k)}});
  if (!result.trace.empty()) std::cout << "final loss " << fmt(result.trace.back().total) << "\n";
  return kOk;
}

// ---- eval / hist ---------------------------------------------------------

struct ScoreArgs {
  fs::path manifest, out, checkpoint, proposals;
  std::string baseline;
  int connectivity = 8;
  int threads = 1;
  int thresholds = 100;
  int bins = 50;
};

void add_score_source(CLI::App* sub, ScoreArgs& a) {
  sub->add_option("--manifest", a.manifest, "Dataset manifest CSV")->required();
  sub->add_option("--out", a.out, "Output directory")->required();
  sub->add_option("--checkpoint", a.checkpoint, "Localizer checkpoint directory");
  sub->add_option("--baseline", a.baseline, "Score raw attention instead of a checkpoint")
      ->check(CLI::IsMember({"attention"}));
  sub->add_option("--proposals", a.proposals, "Selected proposals CSV supplying the localizer's attention input");
  sub->add_option("--threads", a.threads, "Worker threads")->capture_default_str();
}

std::vector<EvalRecord> score_records(const ScoreArgs& a) {
  if (a.checkpoint.empty() == a.baseline.empty()) {
    throw UsageError("exactly one of --checkpoint DIR or --baseline attention is required");
  }
  if (a.threads < 1) throw UsageError("--threads must be >= 1");
  kernels::set_threads(a.threads);
  const DatasetManifest manifest = read_manifest(a.manifest);
  std::optional<std::vector<SelectedRow>> selected;
  if (!a.proposals.empty()) selected = read_selected(a.proposals);
  if (!a.baseline.empty()) return build_eval_records(manifest, ScoreSource::BaselineAttention, nullptr);
  const LocalizerParams params = load_params(a.checkpoint);
  return build_eval_records(manifest, ScoreSource::Localizer, &params, selected ? &*selected : nullptr);
}

RunConfig score_config(const std::string& command, const ScoreArgs& a) {
  return {{"command", command},
          {"manifest", a.manifest.string()},
          {"out", a.out.string()},
          {"checkpoint", a.checkpoint.string()},
          {"baseline", a.baseline},
          {"proposals", a.proposals.string()},
          {"threads", std::to_string(a.threads)}};
}

void add_eval(CLI::App& app, ScoreArgs& a) {
  auto* sub = app.add_subcommand("eval", "MaxBoxAcc / MaxBoxAccV2 of a checkpoint or the attention baseline");
  add_score_source(sub, a);
  sub->add_option("--thresholds", a.thresholds, "Number of uniform binarization thresholds")->capture_default_str();
  sub->add_option("--connectivity", a.connectivity, "Pixel connectivity (4 or 8)")->capture_default_str();
}

int cmd_eval(const ScoreArgs& a) {
  if (a.thresholds < 1) throw UsageError("--thresholds must be >= 1");
  const Connectivity conn = parse_connectivity(a.connectivity);
  const auto records = score_records(a);
  const MetricReport report = evaluate(records, threshold_grid(a.thresholds), kDefaultIouThresholds, conn);
  prepare_out(a.out);
  write_report(report, a.out);
  auto rc = score_config("eval", a);
  rc["thresholds"] = std::to_string(a.thresholds);
  rc["connectivity"] = std::to_string(a.connectivity);
  csv::write_key_values(a.out / "run_config.txt", rc);
  std::cout << summary_line(report) << "\n";
  return kOk;
}

void add_hist(CLI::App& app, ScoreArgs& a) {
  auto* sub = app.add_subcommand("hist", "Foreground/background activation histogram");
  add_score_source(sub, a);
  sub->add_option("--bins", a.bins, "Histogram bins on [0,1]")->capture_default_str();
}

int cmd_hist(const ScoreArgs& a) {
  if (a.bins < 1) throw UsageError("--bins must be >= 1");
  const auto records = score_records(a);
  const ActivationHistogram hist = activation_histogram(records, a.bins);
  prepare_out(a.out);
  write_histogram(hist, a.out / "histogram.csv");
  const std::string line = "mean_fg," + fmt(hist.mean_fg) + ",mean_bg," + fmt(hist.mean_bg) + ",separation," +
                           fmt(hist.separation);
  csv::write_text(a.out / "hist_summary.csv", line + "\n");
  auto rc = score_config("hist", a);
  rc["bins"] = std::to_string(a.bins);
  csv::write_key_values(a.out / "run_config.txt", rc);
  std::cout << line << "\n";
  return kOk;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParam: return kUsage;
    case ErrorKind::Numeric: return kNumeric;
    default: return kData;
  }
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Weakly-supervised localization from self-supervised attention maps", "wsol"};
  app.require_subcommand(1);

  SynthArgs synth;
  ProposalArgs proposals;
  PseudoArgs pseudo;
  TrainArgs train;
  ScoreArgs eval_args, hist_args;
  add_synth(app, synth);
  add_proposals(app, proposals);
  add_pseudolabels(app, pseudo);
  add_train(app, train);
  add_eval(app, eval_args);
  add_hist(app, hist_args);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (name == "synth") return cmd_synth(synth);
    if (name == "proposals") return cmd_proposals(proposals);
    if (name == "pseudolabels") return cmd_pseudolabels(pseudo);
    if (name == "train") return cmd_train(train);
    if (name == "eval") return cmd_eval(eval_args);
    if (name == "hist") return cmd_hist(hist_args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n" << app.get_subcommand(name)->help();
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}

}  // namespace wsol::cli
