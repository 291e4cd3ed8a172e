// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "../tools/commands.hpp"
#include "test_support.hpp"
#include "wsol/attention.hpp"
#include "wsol/csv.hpp"
#include "wsol/dataset.hpp"
#include "wsol/kernels.hpp"
#include "wsol/losses.hpp"
#include "wsol/metrics.hpp"
#include "wsol/proposal.hpp"
#include "wsol/scorer.hpp"
#include "wsol/segment.hpp"
#include "wsol/synth.hpp"

using namespace wsol;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// "k1,v1,k2,v2,..." on the first line of a summary CSV.
std::map<std::string, double> read_pairs(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  const auto fields = csv::split(line);
  std::map<std::string, double> out;
  for (std::size_t i = 0; i + 1 < fields.size(); i += 2) out[fields[i]] = csv::parse_double(fields[i + 1], fields[i]);
  return out;
}

int run_cli(std::vector<std::string> args) { return cli::run(args); }

// ---- criteria ------------------------------------------------------------

Outcome paper_scale_scope() {
  // Published CUB numbers ship as reference data only; check they are intact.
  const fs::path path = fs::path(WSOL_SOURCE_DIR) / "data" / "reference_cub_localization.csv";
  const auto rows = csv::read(path, "method,metric,backbone,value");
  std::map<std::string, double> v;
  for (const auto& r : rows) v[r[0] + "/" + r[1] + "/" + r[2]] = csv::parse_double(r[3], "value");
  const bool ok = rows.size() == 58 && v.size() == 58 && v["pseudo-label localizer/max_box_acc/single"] == 97.0 &&
                  v["pseudo-label localizer/max_box_acc_v2/single"] == 90.9 && v["CAM/max_box_acc/mean"] == 68.8 &&
                  v["CAM/max_box_acc_v2/mean"] == 61.1 && v["F-CAM/max_box_acc/mean"] == 89.7 &&
                  v["F-CAM/max_box_acc_v2/mean"] == 80.3;
  return {ok, "reference table (97.0 / 90.9) stored for context only; acceptance uses the synthetic targets below"};
}

Outcome otsu_oracle() {
  Rng rng(20240601);
  int mismatches = 0;
  const auto t0 = Clock::now();
  for (int i = 0; i < 1000; ++i) {
    Tensor m = testing::random_map(rng, 64, 64);
    if (i % 4 == 0) {
      // Coarse levels produce exact variance ties.
      const int levels = 2 + static_cast<int>(rng.below(7));
      for (auto& v : m.f32_data()) v = std::floor(v * levels) / static_cast<float>(levels);
    }
    const double expected = testing::otsu_brute_force(m);
    double got = -1.0;
    try {
      got = otsu_threshold(m);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateMap) throw;
    }
    mismatches += got == expected ? 0 : 1;
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 10.0, "1000 maps 64x64, mismatches=" + std::to_string(mismatches) + ", " + num(secs) + " s (limit 10 s)"};
}

Outcome components_oracle() {
  Rng rng(20240602);
  int mismatches = 0;
  for (int i = 0; i < 500; ++i) {
    BinaryMask m(32, 32);
    const double p = rng.uniform(0.05, 0.75);
    for (auto& b : m.bits) b = rng.uniform() < p ? 1 : 0;
    std::vector<std::vector<int>> got;
    for (const auto& c : connected_components(m)) got.push_back(c.pixels);
    std::sort(got.begin(), got.end());
    mismatches += got == testing::flood_fill_partition(m, 8) ? 0 : 1;
  }
  return {mismatches == 0, "500 masks 32x32, mismatches=" + std::to_string(mismatches)};
}

Outcome gradient_suite() {
  Rng rng(20240603);
  double worst_ce = 0.0, worst_crf = 0.0, worst_cls = 0.0, worst_raw = 0.0;
  // Denominators are floored at the difference quotient's own resolution
  // (about 2.2e-4 for |L| <= 1); worst_raw reports the unfloored figure.
  auto err = [&](const std::vector<double>& a, const std::vector<double>& fd, double loss) {
    worst_raw = std::max(worst_raw, testing::max_relative_error(a, fd, 1e-8));
    return testing::gradient_error(a, fd, loss);
  };
  auto with = [](LocalizationMap m, const std::vector<double>& x) {
    m.probs = x;
    return m;
  };
  for (int i = 0; i < 20; ++i) {
    const auto m = testing::random_probs(rng, 8, 8);
    const auto labels = testing::random_labels(rng, 8, 8);
    const auto fd = testing::finite_difference([&](const std::vector<double>& x) { return loss_partial_ce(with(m, x), labels).value; }, m.probs);
    const auto r = loss_partial_ce(m, labels);
    worst_ce = std::max(worst_ce, err(r.grad, fd, r.value));
  }
  for (int i = 0; i < 20; ++i) {
    const Tensor img = testing::random_image(rng, 16, 16);
    const auto grid = make_crf_grid(img, CrfParams{rng.uniform(1.0, 8.0), rng.uniform(0.1, 0.5), 8});
    const auto m = testing::random_probs(rng, 16, 16);
    const auto fd = testing::finite_difference([&](const std::vector<double>& x) { return loss_crf(with(m, x), grid).value; }, m.probs);
    const auto r = loss_crf(m, grid);
    worst_crf = std::max(worst_crf, err(r.grad, fd, r.value));
  }
  for (int i = 0; i < 20; ++i) {
    const auto features = make_features(testing::random_image(rng, 8, 8), testing::random_map(rng, 8, 8));
    const auto m = testing::random_probs(rng, 8, 8);
    const int n = 2 + static_cast<int>(rng.below(4));
    std::vector<double> head(static_cast<std::size_t>(n) * kHeadInputs);
    for (auto& v : head) v = rng.normal();
    const int y = static_cast<int>(rng.below(n));
    const auto r = loss_class(m, features, y, head, n);
    const auto fd_s = testing::finite_difference([&](const std::vector<double>& x) { return loss_class(with(m, x), features, y, head, n).value; }, m.probs);
    const auto fd_h = testing::finite_difference([&](const std::vector<double>& x) { return loss_class(m, features, y, x, n).value; }, head);
    worst_cls = std::max({worst_cls, err(r.grad_probs, fd_s, r.value), err(r.grad_head, fd_h, r.value)});
  }
  const bool ok = worst_ce <= 1e-6 && worst_crf <= 1e-6 && worst_cls <= 1e-6;
  return {ok, "max rel err ce=" + num(worst_ce) + " crf=" + num(worst_crf) + " class=" + num(worst_cls) +
                  " (limit 1e-6, 20 instances each; unfloored max " + num(worst_raw) + ")"};
}

Tensor filled(int h, int w, float v) {
  return Tensor::f32({static_cast<std::size_t>(h), static_cast<std::size_t>(w)},
                     std::vector<float>(static_cast<std::size_t>(h) * w, v));
}

void paint(Tensor& m, const BBox& b, float v) {
  const int w = static_cast<int>(m.extent(1));
  for (int y = b.y0; y < b.y1; ++y)
    for (int x = b.x0; x < b.x1; ++x) m.f32_data()[static_cast<std::size_t>(y) * w + x] = v;
}

// Image 1 is right only for tau < 0.45 (an isolated max pixel takes over
// above); image 2 only for tau >= 0.5. Both maps span exactly [0, 1] so the
// attention baseline sees them unchanged.
std::vector<std::pair<Tensor, BBox>> crossover_maps() {
  const BBox g1{4, 4, 12, 12}, g2{2, 2, 8, 8};
  Tensor m1 = filled(20, 20, 0.0f);
  paint(m1, g1, 0.45f);
  paint(m1, {18, 18, 19, 19}, 1.0f);
  Tensor m2 = filled(20, 20, 0.5f);
  paint(m2, g2, 0.9f);
  paint(m2, {3, 3, 4, 4}, 1.0f);
  paint(m2, {19, 19, 20, 20}, 0.0f);
  return {{m1, g1}, {m2, g2}};
}

Outcome metric_hand_cases(const fs::path& work) {
  std::vector<std::string> notes;
  bool ok = true;

  // Crossover through the library.
  std::vector<EvalRecord> records;
  for (const auto& [m, g] : crossover_maps()) records.push_back({"x", m, {g}});
  const auto rep = evaluate(records, threshold_grid());
  ok = ok && rep.v1.value == 0.5 && max_box_acc(records, threshold_grid()).value == 0.5;
  notes.push_back("crossover v1=" + num(rep.v1.value));

  // Crossover through `eval --baseline attention`: heads identical to the maps.
  const fs::path data = work / "crossover";
  fs::create_directories(data / "t");
  DatasetManifest manifest;
  manifest.root = data;
  int idx = 0;
  for (const auto& [m, g] : crossover_maps()) {
    const std::string id = "x" + std::to_string(idx++);
    write_tensor(Tensor::f32({20, 20, 3}), data / "t" / (id + "_img.tnsr"));
    Tensor stack = Tensor::f32({5, 20, 20});
    for (int k = 0; k < 5; ++k) std::copy(m.f32_data().begin(), m.f32_data().end(), stack.f32_data().begin() + k * 400);
    write_tensor(stack, data / "t" / (id + "_att.tnsr"));
    manifest.records.push_back({id, "t/" + id + "_img.tnsr", "t/" + id + "_att.tnsr", 0, {g}});
  }
  write_manifest(manifest, data / "manifest.csv");
  const int code = run_cli({"eval", "--manifest", (data / "manifest.csv").string(), "--out", (work / "crossover_eval").string(),
                            "--baseline", "attention"});
  const auto summary = code == 0 ? read_pairs(work / "crossover_eval" / "summary.csv") : std::map<std::string, double>{};
  const double cli_v1 = summary.count("max_box_acc") ? summary.at("max_box_acc") : -1.0;
  ok = ok && code == 0 && cli_v1 == 0.5;
  notes.push_back("eval cli v1=" + num(cli_v1));

  // Best achievable IoU 0.6 everywhere: (1 + 1 + 0) / 3.
  std::vector<EvalRecord> partial;
  for (int i = 0; i < 4; ++i) {
    Tensor m = filled(16, 16, 0.0f);
    paint(m, {i, 0, i + 10, 6}, 1.0f);
    partial.push_back({"p", std::move(m), {BBox{i, 0, i + 10, 10}}});
  }
  const double v2 = max_box_acc_v2(partial, threshold_grid()).value;
  ok = ok && std::abs(v2 - 2.0 / 3.0) <= 1e-15;
  notes.push_back("iou0.6 v2=" + num(v2));

  // Dominance of the all-components rule at delta 0.5.
  Rng rng(20240604);
  int violations = 0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<EvalRecord> rs;
    for (int i = 0; i < 10; ++i) {
      Tensor m = testing::random_map(rng, 16, 16);
      for (int b = 0; b < 3; ++b) {
        const int x0 = static_cast<int>(rng.below(12)), y0 = static_cast<int>(rng.below(12));
        paint(m, {x0, y0, x0 + 1 + static_cast<int>(rng.below(4)), y0 + 1 + static_cast<int>(rng.below(4))}, static_cast<float>(rng.uniform()));
      }
      const int x0 = static_cast<int>(rng.below(12)), y0 = static_cast<int>(rng.below(12));
      rs.push_back({"d", std::move(m), {BBox{x0, y0, x0 + 4, y0 + 4}}});
    }
    const auto r = evaluate(rs, threshold_grid(), {0.5});
    for (std::size_t t = 0; t < r.v1.curve.size(); ++t) violations += r.v2.curves[0][t].acc >= r.v1.curve[t].acc ? 0 : 1;
  }
  ok = ok && violations == 0;
  notes.push_back("dominance violations=" + std::to_string(violations));

  const double i = iou(BBox{0, 0, 10, 10}, BBox{5, 5, 15, 15});
  ok = ok && std::abs(i - 25.0 / 175.0) <= 1e-12;
  notes.push_back("iou=" + num(i));

  std::string detail;
  for (const auto& n : notes) detail += (detail.empty() ? "" : ", ") + n;
  return {ok, detail};
}

class ReplayScorer final : public Scorer {
 public:
  ReplayScorer(std::vector<std::vector<double>> t, std::function<double(double)> f) : table_(std::move(t)), f_(std::move(f)) {}
  int n_classes() const override { return static_cast<int>(table_.at(0).size()); }
  std::vector<double> score(std::string_view, std::size_t i, const Tensor&) const override {
    auto row = table_.at(i);
    for (auto& v : row) v = f_(v);
    return row;
  }

 private:
  std::vector<std::vector<double>> table_;
  std::function<double(double)> f_;
};

Outcome argmax_invariance(const fs::path& work) {
  SynthConfig cfg;
  cfg.n_images = 20;
  cfg.rng_seed = 99;
  const auto manifest = generate_synthetic(cfg, work / "argmax");
  const auto scorer = toy_scorer_fit(manifest, 0);
  Rng rng(20240605);
  int violations = 0, checked = 0;
  std::size_t r = 0;
  for (int t = 0; t < 100; ++t, ++r) {
    const auto& rec = manifest.records[r % manifest.records.size()];
    const auto set = make_proposals(read_tensor(manifest.resolve(rec.image_path)),
                                    select_candidates(read_tensor(manifest.resolve(rec.attention_path))));
    if (set.proposals.empty()) continue;
    std::vector<std::vector<double>> table;
    for (std::size_t i = 0; i < set.proposals.size(); ++i) table.push_back(scorer.score(rec.image_id, i, set.proposals[i].image));
    const double a = rng.uniform(0.1, 10.0), b = rng.uniform(-5.0, 5.0), c = rng.uniform(0.5, 3.0);
    std::function<double(double)> f;
    switch (t % 4) {
      case 0: f = [=](double v) { return a * v + b; }; break;
      case 1: f = [=](double v) { return std::log(v) * c + b; }; break;
      case 2: f = [=](double v) { return std::pow(v, c); }; break;
      default: f = [=](double v) { return std::tanh(a * (v - 0.5)) + v; }; break;
    }
    const auto base = select_best(set, ReplayScorer(table, [](double v) { return v; }));
    const auto moved = select_best(set, ReplayScorer(table, f));
    violations += (base.proposal_index == moved.proposal_index && base.class_id == moved.class_id) ? 0 : 1;
    ++checked;
  }
  return {violations == 0 && checked == 100, std::to_string(checked) + " transforms, violations=" + std::to_string(violations)};
}

struct PipelineDirs {
  fs::path train, test, prop, pl, ckpt_dir, eval, base, hist, base_hist;
};

std::vector<std::vector<std::string>> pipeline_commands(const PipelineDirs& d) {
  const auto s = [](const fs::path& p) { return p.string(); };
  return {
      {"synth", "--out", s(d.train), "--n", "200", "--seed", "7"},
      {"synth", "--out", s(d.test), "--n", "100", "--seed", "1007"},
      {"proposals", "--manifest", s(d.train / "manifest.csv"), "--out", s(d.prop), "--threads", "1"},
      {"pseudolabels", "--manifest", s(d.train / "manifest.csv"), "--proposals", s(d.prop / "proposals.csv"), "--out", s(d.pl),
       "--n-frac", "0.1"},
      {"train", "--manifest", s(d.train / "manifest.csv"), "--proposals", s(d.prop / "proposals.csv"), "--pseudolabels",
       s(d.pl / "pseudolabels.csv"), "--out", s(d.ckpt_dir), "--steps", "500"},
      {"eval", "--manifest", s(d.test / "manifest.csv"), "--out", s(d.eval), "--checkpoint", s(d.ckpt_dir / "checkpoint"),
       "--threads", "1"},
      {"eval", "--manifest", s(d.test / "manifest.csv"), "--out", s(d.base), "--baseline", "attention", "--threads", "1"},
      {"hist", "--manifest", s(d.test / "manifest.csv"), "--out", s(d.hist), "--checkpoint", s(d.ckpt_dir / "checkpoint"),
       "--threads", "1"},
      {"hist", "--manifest", s(d.test / "manifest.csv"), "--out", s(d.base_hist), "--baseline", "attention", "--threads", "1"},
  };
}

PipelineDirs dirs_under(const fs::path& root) {
  return {root / "train_data", root / "test_data", root / "proposals", root / "pseudolabels", root / "train",
          root / "eval", root / "eval_baseline", root / "hist", root / "hist_baseline"};
}

Outcome end_to_end(const fs::path& root) {
  kernels::set_threads(1);
  const auto d = dirs_under(root);
  const auto t0 = Clock::now();
  for (const auto& cmd : pipeline_commands(d)) {
    const int code = run_cli(cmd);
    if (code != 0) return {false, "`" + cmd[0] + "` exited with " + std::to_string(code)};
  }
  const double secs = seconds_since(t0);
  const auto eval = read_pairs(d.eval / "summary.csv");
  const auto base = read_pairs(d.base / "summary.csv");
  const auto hist = read_pairs(d.hist / "hist_summary.csv");
  const auto base_hist = read_pairs(d.base_hist / "hist_summary.csv");
  const double v2 = eval.at("max_box_acc_v2");
  const double gain = hist.at("separation") - base_hist.at("separation");
  const bool ok = v2 >= 0.85 && gain >= 0.1 && secs < 300.0;
  return {ok, "MaxBoxAccV2=" + num(v2) + " (>= 0.85; baseline " + num(base.at("max_box_acc_v2")) + "), separation " +
                  num(hist.at("separation")) + " vs baseline " + num(base_hist.at("separation")) + " gain=" + num(gain) +
                  " (>= 0.1), " + num(secs) + " s single-threaded (< 300 s)"};
}

// Reruns every pipeline command into a second tree and compares all artifacts.
// run_config.txt records paths, so it is compared after substituting the root.
Outcome determinism(const fs::path& first_root, const fs::path& second_root) {
  const auto a = dirs_under(first_root);
  const auto b = dirs_under(second_root);
  const auto ca = pipeline_commands(a);
  const auto cb = pipeline_commands(b);
  const fs::path outs_a[] = {a.train, a.test, a.prop, a.pl, a.ckpt_dir, a.eval, a.base, a.hist, a.base_hist};
  const fs::path outs_b[] = {b.train, b.test, b.prop, b.pl, b.ckpt_dir, b.eval, b.base, b.hist, b.base_hist};
  std::vector<std::string> differing;
  for (std::size_t i = 0; i < cb.size(); ++i) {
    if (run_cli(cb[i]) != 0) return {false, "`" + cb[i][0] + "` failed on rerun"};
    auto ta = testing::snapshot_tree(outs_a[i]);
    auto tb = testing::snapshot_tree(outs_b[i]);
    auto& cfg = tb["run_config.txt"];
    for (std::size_t pos; (pos = cfg.find(second_root.string())) != std::string::npos;) {
      cfg.replace(pos, second_root.string().size(), first_root.string());
    }
    if (ta != tb) differing.push_back(cb[i][0] + ":" + outs_b[i].filename().string());
  }
  std::string detail = std::to_string(cb.size()) + " invocations (synth, proposals, pseudolabels, train, eval, hist) rerun";
  if (differing.empty()) return {true, detail + ", all artifacts byte-identical"};
  for (const auto& s : differing) detail += ", differs: " + s;
  return {false, detail};
}

}  // namespace

int main() {
  testing::TempDir work("acceptance");
  int failures = 0;
  auto report = [&](const std::string& name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  };

  report("paper_scale_scope", paper_scale_scope);
  report("otsu_oracle", otsu_oracle);
  report("components_oracle", components_oracle);
  report("gradient_suite", gradient_suite);
  report("metric_hand_cases", [&] { return metric_hand_cases(work.path()); });
  report("argmax_invariance", [&] { return argmax_invariance(work.path()); });
  report("end_to_end_synthetic", [&] { return end_to_end(work / "run1"); });
  report("cli_determinism", [&] { return determinism(work / "run1", work / "run2"); });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
