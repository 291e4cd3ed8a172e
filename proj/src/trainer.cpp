#include "wsol/trainer.hpp"

#include <cmath>

#include "wsol/csv.hpp"
#include "wsol/error.hpp"
#include "wsol/rng.hpp"

namespace wsol {
namespace {

struct Prepared {
  const TrainingExample* example;
  PixelFeatures features;
  CrfGrid grid;
};

void axpy(std::vector<double>& dst, double a, const std::vector<double>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += a * src[i];
}

}  // namespace

TrainResult train_localizer(std::span<const TrainingExample> examples, const TrainHyper& hyper, int n_classes) {
  if (hyper.steps < 0 || !(hyper.lr > 0.0)) fail(ErrorKind::InvalidParam, "training needs lr > 0 and steps >= 0");
  if (hyper.lambda_crf < 0.0 || hyper.lambda_class < 0.0) fail(ErrorKind::InvalidParam, "loss weights must be >= 0");
  hyper.crf.validate();

  std::vector<Prepared> data;
  for (const auto& ex : examples) {
    if (ex.labels.empty()) continue;
    if (hyper.lambda_class > 0.0 && (ex.class_id < 0 || ex.class_id >= n_classes)) {
      fail(ErrorKind::InvalidDataset, "class id out of range for '" + ex.image_id + "'");
    }
    Prepared p{&ex, make_features(ex.image, ex.attention), {}};
    if (hyper.lambda_crf > 0.0) p.grid = make_crf_grid(ex.image, hyper.crf);
    data.push_back(std::move(p));
  }
  if (data.empty()) fail(ErrorKind::InvalidDataset, "no image with pseudo-labels to train on");

  TrainResult result;
  result.params = LocalizerParams::seeded(n_classes, hyper.seed);
  auto& params = result.params;
  Rng order_rng(hyper.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order(data.size());
  std::size_t cursor = order.size();
  ForwardCache cache;

  for (int step = 0; step < hyper.steps; ++step) {
    if (cursor == order.size()) {
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[order_rng.below(i)]);
      cursor = 0;
    }
    const Prepared& item = data[order[cursor++]];
    const TrainingExample& ex = *item.example;

    const LocalizationMap map = forward(params, item.features, &cache);
    const PseudoLabels labels =
        hyper.subsample_k > 0
            ? subsample(ex.labels, hyper.subsample_k, hyper.seed + 0x51ED2701ULL * static_cast<std::uint64_t>(step + 1))
            : ex.labels;

    TrainStep rec;
    rec.step = step;
    LossResult ce = loss_partial_ce(map, labels);
    rec.ce = ce.value;
    std::vector<double> grad = std::move(ce.grad);
    if (hyper.lambda_crf > 0.0) {
      const LossResult crf = loss_crf(map, item.grid);
      rec.crf = crf.value;
      axpy(grad, hyper.lambda_crf, crf.grad);
    }
    std::vector<double> head_grad;
    if (hyper.lambda_class > 0.0) {
      ClassLossResult cls = loss_class(map, item.features, ex.class_id, params.head, params.n_classes);
      rec.cls = cls.value;
      axpy(grad, hyper.lambda_class, cls.grad_probs);
      head_grad = std::move(cls.grad_head);
    }
    rec.total = rec.ce + hyper.lambda_crf * rec.crf + hyper.lambda_class * rec.cls;
    if (!std::isfinite(rec.total)) {
      fail(ErrorKind::Numeric, "non-finite loss at step " + std::to_string(step) + " on '" + ex.image_id + "'");
    }

    const ParamGradient g = backward(params, item.features, cache, map, grad);
    axpy(params.w1, -hyper.lr, g.w1);
    axpy(params.b1, -hyper.lr, g.b1);
    axpy(params.w2, -hyper.lr, g.w2);
    axpy(params.b2, -hyper.lr, g.b2);
    if (!head_grad.empty()) axpy(params.head, -hyper.lr * hyper.lambda_class, head_grad);
    result.trace.push_back(rec);
  }
  return result;
}

void write_loss_trace(const std::vector<TrainStep>& trace, const std::filesystem::path& csv_path) {
  csv::Writer out(csv_path, kLossTraceHeader);
  for (const auto& s : trace) {
    out.row({std::to_string(s.step), csv::format(s.total), csv::format(s.ce), csv::format(s.crf), csv::format(s.cls)});
  }
  out.close();
}

}  // namespace wsol
