#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "wsol/box.hpp"
#include "wsol/segment.hpp"
#include "wsol/tensor.hpp"

namespace wsol {

struct EvalRecord {
  std::string image_id;
  Tensor score_map;  // [H,W] in [0,1]
  std::vector<BBox> gt_boxes;
};

/// (2i + 1) / (2n) for i in [0, n): 0.005, 0.015, ..., 0.995 when n = 100.
std::vector<double> threshold_grid(int n = 100);

inline const std::vector<double> kDefaultIouThresholds = {0.3, 0.5, 0.7};

/// Components of {value > tau}, tight box each, largest first.
std::vector<BBox> boxes_at_threshold(const Tensor& map, double tau,
                                     Connectivity connectivity = Connectivity::Eight);

struct CurvePoint {
  double tau = 0.0;
  double acc = 0.0;
};

struct MaxBoxAccResult {
  double value = 0.0;
  std::vector<CurvePoint> curve;
};

struct MaxBoxAccV2Result {
  double value = 0.0;                         ///< mean over deltas of the per-delta maxima
  std::vector<double> deltas;
  std::vector<double> best_per_delta;
  std::vector<std::vector<CurvePoint>> curves;  ///< one curve per delta
};

/// Largest component only, IoU >= 0.5 against any gt box; images without a
/// component count as misses. Throws InvalidInput on empty records.
MaxBoxAccResult max_box_acc(const std::vector<EvalRecord>& records, const std::vector<double>& thresholds,
                            Connectivity connectivity = Connectivity::Eight);

/// Any component box against any gt box, per IoU threshold delta.
MaxBoxAccV2Result max_box_acc_v2(const std::vector<EvalRecord>& records, const std::vector<double>& thresholds,
                                 const std::vector<double>& deltas = kDefaultIouThresholds,
                                 Connectivity connectivity = Connectivity::Eight);

struct MetricReport {
  MaxBoxAccResult v1;
  MaxBoxAccV2Result v2;
};

/// Both metrics from one component pass per (image, threshold).
MetricReport evaluate(const std::vector<EvalRecord>& records, const std::vector<double>& thresholds,
                      const std::vector<double>& deltas = kDefaultIouThresholds,
                      Connectivity connectivity = Connectivity::Eight);

/// Writes curve_v1.csv (tau,acc), curve_v2.csv (tau,delta,acc) and summary.csv.
void write_report(const MetricReport& report, const std::filesystem::path& dir);
std::string summary_line(const MetricReport& report);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  long long count_fg = 0;
  long long count_bg = 0;
  double frac_fg = 0.0;
  double frac_bg = 0.0;
};

struct ActivationHistogram {
  std::vector<HistogramBin> bins;
  double mean_fg = 0.0;
  double mean_bg = 0.0;
  double separation = 0.0;  ///< mean_fg - mean_bg
};

/// Score-map values pooled over all images, split by whether a pixel lies in
/// any gt box.
ActivationHistogram activation_histogram(const std::vector<EvalRecord>& records, int bins = 50);

inline constexpr const char* kHistogramHeader = "bin_lo,bin_hi,count_fg,count_bg,frac_fg,frac_bg";
void write_histogram(const ActivationHistogram& hist, const std::filesystem::path& csv_path);

}  // namespace wsol
