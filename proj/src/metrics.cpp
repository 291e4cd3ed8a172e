#include "wsol/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "wsol/csv.hpp"
#include "wsol/error.hpp"

namespace wsol {

std::vector<double> threshold_grid(int n) {
  if (n < 1) fail(ErrorKind::InvalidParam, "threshold grid needs at least one value");
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) t[i] = (2.0 * i + 1.0) / (2.0 * n);
  return t;
}

std::vector<BBox> boxes_at_threshold(const Tensor& map, double tau, Connectivity connectivity) {
  std::vector<BBox> boxes;
  for (const auto& c : connected_components(binarize_above(map, tau), connectivity)) boxes.push_back(c.bbox);
  return boxes;
}

namespace {

void check_records(const std::vector<EvalRecord>& records) {
  if (records.empty()) fail(ErrorKind::InvalidInput, "no evaluation records");
  for (const auto& r : records) {
    require_f32(r.score_map, 2, "score map");
    if (r.gt_boxes.empty()) fail(ErrorKind::InvalidInput, "record '" + r.image_id + "' has no gt boxes");
  }
}

double best_iou(const BBox& box, const std::vector<BBox>& gts) {
  double best = 0.0;
  for (const auto& g : gts) best = std::max(best, iou(box, g));
  return best;
}

}  // namespace

MetricReport evaluate(const std::vector<EvalRecord>& records, const std::vector<double>& thresholds,
                      const std::vector<double>& deltas, Connectivity connectivity) {
  check_records(records);
  if (thresholds.empty() || deltas.empty()) fail(ErrorKind::InvalidParam, "empty threshold or IoU grid");
  const std::size_t nt = thresholds.size();
  const std::size_t nd = deltas.size();

  // hits_v1[i][t], hits_v2[i][d * nt + t]
  std::vector<std::vector<char>> hits_v1(records.size(), std::vector<char>(nt, 0));
  std::vector<std::vector<char>> hits_v2(records.size(), std::vector<char>(nd * nt, 0));
  const auto n = static_cast<std::ptrdiff_t>(records.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& rec = records[static_cast<std::size_t>(i)];
    for (std::size_t t = 0; t < nt; ++t) {
      const auto boxes = boxes_at_threshold(rec.score_map, thresholds[t], connectivity);
      if (boxes.empty()) continue;
      hits_v1[i][t] = best_iou(boxes.front(), rec.gt_boxes) >= 0.5;
      double best = 0.0;
      for (const auto& b : boxes) best = std::max(best, best_iou(b, rec.gt_boxes));
      for (std::size_t d = 0; d < nd; ++d) hits_v2[i][d * nt + t] = best >= deltas[d];
    }
  }

  const double count = static_cast<double>(records.size());
  MetricReport rep;
  for (std::size_t t = 0; t < nt; ++t) {
    long long hits = 0;
    for (const auto& h : hits_v1) hits += h[t];
    rep.v1.curve.push_back({thresholds[t], static_cast<double>(hits) / count});
    rep.v1.value = std::max(rep.v1.value, rep.v1.curve.back().acc);
  }
  rep.v2.deltas = deltas;
  double sum = 0.0;
  for (std::size_t d = 0; d < nd; ++d) {
    std::vector<CurvePoint> curve;
    double best = 0.0;
    for (std::size_t t = 0; t < nt; ++t) {
      long long hits = 0;
      for (const auto& h : hits_v2) hits += h[d * nt + t];
      curve.push_back({thresholds[t], static_cast<double>(hits) / count});
      best = std::max(best, curve.back().acc);
    }
    rep.v2.curves.push_back(std::move(curve));
    rep.v2.best_per_delta.push_back(best);
    sum += best;
  }
  rep.v2.value = sum / static_cast<double>(nd);
  return rep;
}

MaxBoxAccResult max_box_acc(const std::vector<EvalRecord>& records, const std::vector<double>& thresholds,
                            Connectivity connectivity) {
  return evaluate(records, thresholds, {0.5}, connectivity).v1;
}

MaxBoxAccV2Result max_box_acc_v2(const std::vector<EvalRecord>& records, const std::vector<double>& thresholds,
                                 const std::vector<double>& deltas, Connectivity connectivity) {
  return evaluate(records, thresholds, deltas, connectivity).v2;
}

std::string summary_line(const MetricReport& report) {
  return "max_box_acc," + csv::format(report.v1.value) + ",max_box_acc_v2," + csv::format(report.v2.value);
}

void write_report(const MetricReport& report, const std::filesystem::path& dir) {
  {
    csv::Writer out(dir / "curve_v1.csv", "tau,acc");
    for (const auto& p : report.v1.curve) out.row({csv::format(p.tau), csv::format(p.acc)});
    out.close();
  }
  {
    csv::Writer out(dir / "curve_v2.csv", "tau,delta,acc");
    for (std::size_t d = 0; d < report.v2.deltas.size(); ++d)
      for (const auto& p : report.v2.curves[d])
        out.row({csv::format(p.tau), csv::format(report.v2.deltas[d]), csv::format(p.acc)});
    out.close();
  }
  csv::write_text(dir / "summary.csv", summary_line(report) + "\n");
}

ActivationHistogram activation_histogram(const std::vector<EvalRecord>& records, int bins) {
  if (bins < 1) fail(ErrorKind::InvalidParam, "histogram needs at least one bin");
  ActivationHistogram h;
  h.bins.resize(bins);
  for (int b = 0; b < bins; ++b) {
    h.bins[b].lo = static_cast<double>(b) / bins;
    h.bins[b].hi = static_cast<double>(b + 1) / bins;
  }
  double sum_fg = 0.0, sum_bg = 0.0;
  long long n_fg = 0, n_bg = 0;
  for (const auto& r : records) {
    require_f32(r.score_map, 2, "score map");
    const int height = static_cast<int>(r.score_map.extent(0));
    const int width = static_cast<int>(r.score_map.extent(1));
    const auto v = r.score_map.f32_data();
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double value = v[static_cast<std::size_t>(y) * width + x];
        const int b = std::clamp(static_cast<int>(std::floor(value * bins)), 0, bins - 1);
        const bool inside = std::any_of(r.gt_boxes.begin(), r.gt_boxes.end(),
                                        [&](const BBox& g) { return g.contains(x, y); });
        if (inside) {
          ++h.bins[b].count_fg;
          ++n_fg;
          sum_fg += value;
        } else {
          ++h.bins[b].count_bg;
          ++n_bg;
          sum_bg += value;
        }
      }
    }
  }
  for (auto& b : h.bins) {
    b.frac_fg = n_fg ? static_cast<double>(b.count_fg) / static_cast<double>(n_fg) : 0.0;
    b.frac_bg = n_bg ? static_cast<double>(b.count_bg) / static_cast<double>(n_bg) : 0.0;
  }
  h.mean_fg = n_fg ? sum_fg / static_cast<double>(n_fg) : 0.0;
  h.mean_bg = n_bg ? sum_bg / static_cast<double>(n_bg) : 0.0;
  h.separation = h.mean_fg - h.mean_bg;
  return h;
}

void write_histogram(const ActivationHistogram& hist, const std::filesystem::path& csv_path) {
  csv::Writer out(csv_path, kHistogramHeader);
  for (const auto& b : hist.bins) {
    out.row({csv::format(b.lo), csv::format(b.hi), std::to_string(b.count_fg), std::to_string(b.count_bg),
             csv::format(b.frac_fg), csv::format(b.frac_bg)});
  }
  out.close();
}

}  // namespace wsol
