#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "test_support.hpp"
#include "wsol/metrics.hpp"

using namespace wsol;

namespace {

Tensor filled(int h, int w, float v) {
  return Tensor::f32({static_cast<std::size_t>(h), static_cast<std::size_t>(w)},
                     std::vector<float>(static_cast<std::size_t>(h) * w, v));
}

void paint(Tensor& m, const BBox& b, float v) {
  const int w = static_cast<int>(m.extent(1));
  for (int y = b.y0; y < b.y1; ++y)
    for (int x = b.x0; x < b.x1; ++x) m.f32_data()[static_cast<std::size_t>(y) * w + x] = v;
}

EvalRecord record(Tensor m, std::vector<BBox> gt) { return {"r", std::move(m), std::move(gt)}; }

double curve_max(const std::vector<CurvePoint>& c) {
  double best = 0.0;
  for (const auto& p : c) best = std::max(best, p.acc);
  return best;
}

}  // namespace

TEST_CASE("threshold grid") {
  const auto g = threshold_grid();
  REQUIRE(g.size() == 100);
  CHECK(g.front() == doctest::Approx(0.005));
  CHECK(g.back() == doctest::Approx(0.995));
  CHECK(g[50] == doctest::Approx(0.505));
}

TEST_CASE("boxes_at_threshold") {
  Rng rng(1);
  Tensor m = testing::random_map(rng, 8, 9);
  for (auto& v : m.f32_data()) v = 0.01f + 0.98f * v;
  CHECK(boxes_at_threshold(m, 1.0).empty());
  const auto full = boxes_at_threshold(m, 0.0);
  REQUIRE(full.size() == 1);
  CHECK(full[0] == BBox{0, 0, 9, 8});

  Tensor step = filled(10, 10, 0.1f);
  paint(step, {2, 3, 7, 9}, 0.9f);
  const auto boxes = boxes_at_threshold(step, 0.5);
  REQUIRE(boxes.size() == 1);
  CHECK(boxes[0] == BBox{2, 3, 7, 9});
}

TEST_CASE("indicator maps score perfectly") {
  std::vector<EvalRecord> records;
  Rng rng(2);
  for (int i = 0; i < 10; ++i) {
    const int x0 = static_cast<int>(rng.below(10)), y0 = static_cast<int>(rng.below(10));
    const BBox b{x0, y0, x0 + 3 + static_cast<int>(rng.below(10)), y0 + 3 + static_cast<int>(rng.below(10))};
    Tensor m = filled(24, 24, 0.0f);
    paint(m, b, 1.0f);
    records.push_back(record(std::move(m), {b}));
  }
  const auto rep = evaluate(records, threshold_grid());
  CHECK(rep.v1.value == 1.0);
  CHECK(rep.v2.value == 1.0);
  for (double b : rep.v2.best_per_delta) CHECK(b == 1.0);
  CHECK(max_box_acc(records, threshold_grid()).value == 1.0);
  CHECK(max_box_acc_v2(records, threshold_grid()).value == 1.0);
}

TEST_CASE("uniform noise maps score poorly") {
  Rng rng(3);
  std::vector<EvalRecord> records;
  for (int i = 0; i < 200; ++i) {
    const int x0 = static_cast<int>(rng.below(26)), y0 = static_cast<int>(rng.below(26));
    records.push_back(record(testing::random_map(rng, 32, 32), {BBox{x0, y0, x0 + 6, y0 + 6}}));
  }
  CHECK(max_box_acc(records, threshold_grid()).value < 0.2);
}

TEST_CASE("crossover case scores one half") {
  // Image 1 is right only below 0.45, image 2 only above 0.5.
  const BBox g1{4, 4, 12, 12}, g2{2, 2, 8, 8};
  Tensor m1 = filled(20, 20, 0.0f);
  paint(m1, g1, 0.45f);
  Tensor m2 = filled(20, 20, 0.5f);
  paint(m2, g2, 0.9f);
  const std::vector<EvalRecord> records{record(m1, {g1}), record(m2, {g2})};
  const auto r = max_box_acc(records, threshold_grid());
  CHECK(r.value == 0.5);
  for (const auto& p : r.curve) {
    if (p.tau < 0.45) CHECK(p.acc == 0.5);
    else if (p.tau < 0.5) CHECK(p.acc == 0.0);
    else if (p.tau < 0.9) CHECK(p.acc == 0.5);
  }
}

TEST_CASE("best achievable IoU of 0.6 scores two thirds") {
  std::vector<EvalRecord> records;
  for (int i = 0; i < 4; ++i) {
    Tensor m = filled(16, 16, 0.0f);
    paint(m, {i, 0, i + 10, 6}, 1.0f);
    records.push_back(record(std::move(m), {BBox{i, 0, i + 10, 10}}));
  }
  const auto r = max_box_acc_v2(records, threshold_grid());
  CHECK(r.value == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(r.best_per_delta == std::vector<double>{1.0, 1.0, 0.0});
}

TEST_CASE("all-components rule dominates the largest-component rule") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<EvalRecord> records;
    for (int i = 0; i < 10; ++i) {
      Tensor m = filled(16, 16, 0.0f);
      for (int b = 0; b < 3; ++b) {
        const int x0 = static_cast<int>(rng.below(12)), y0 = static_cast<int>(rng.below(12));
        paint(m, {x0, y0, x0 + 1 + static_cast<int>(rng.below(4)), y0 + 1 + static_cast<int>(rng.below(4))},
              static_cast<float>(rng.uniform()));
      }
      for (auto& v : m.f32_data()) v = std::clamp(v + static_cast<float>(rng.uniform(0.0, 0.1)), 0.0f, 1.0f);
      const int x0 = static_cast<int>(rng.below(12)), y0 = static_cast<int>(rng.below(12));
      records.push_back(record(std::move(m), {BBox{x0, y0, x0 + 4, y0 + 4}}));
    }
    const auto rep = evaluate(records, threshold_grid(), {0.5});
    for (std::size_t t = 0; t < rep.v1.curve.size(); ++t) REQUIRE(rep.v2.curves[0][t].acc >= rep.v1.curve[t].acc);
    CHECK(rep.v1.value == curve_max(rep.v1.curve));
    CHECK(rep.v2.best_per_delta[0] == curve_max(rep.v2.curves[0]));
    const auto v1 = max_box_acc(records, threshold_grid());
    CHECK(v1.value == rep.v1.value);
  }
}

TEST_CASE("grid sweep equals the exact sweep when levels are spread out") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<EvalRecord> records;
    std::set<double> levels;
    for (int i = 0; i < 6; ++i) {
      Tensor m = filled(12, 12, 0.0f);
      for (auto& v : m.f32_data()) v = 0.02f * static_cast<float>(1 + rng.below(49));
      for (float v : m.f32_data()) levels.insert(v);
      const int x0 = static_cast<int>(rng.below(8)), y0 = static_cast<int>(rng.below(8));
      records.push_back(record(std::move(m), {BBox{x0, y0, x0 + 4, y0 + 4}}));
    }
    std::vector<double> exact{0.0};
    exact.insert(exact.end(), levels.begin(), levels.end());
    const auto grid = evaluate(records, threshold_grid());
    const auto sweep = evaluate(records, exact);
    CHECK(grid.v1.value == sweep.v1.value);
    CHECK(grid.v2.value == sweep.v2.value);
  }
}

TEST_CASE("metric errors") {
  CHECK(testing::throws_kind([] { max_box_acc({}, threshold_grid()); }, ErrorKind::InvalidInput));
  CHECK(testing::throws_kind([] { max_box_acc_v2({}, threshold_grid()); }, ErrorKind::InvalidInput));
}

TEST_CASE("report files") {
  testing::TempDir dir("report");
  Tensor m = filled(8, 8, 0.0f);
  paint(m, {1, 1, 5, 5}, 1.0f);
  const auto rep = evaluate({record(m, {BBox{1, 1, 5, 5}})}, threshold_grid(4));
  write_report(rep, dir.path());
  std::ifstream in(dir / "summary.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "max_box_acc,1,max_box_acc_v2,1");
  CHECK(summary_line(rep) == line);
  std::ifstream c1(dir / "curve_v1.csv");
  std::getline(c1, line);
  CHECK(line == "tau,acc");
  std::ifstream c2(dir / "curve_v2.csv");
  std::getline(c2, line);
  CHECK(line == "tau,delta,acc");
}

TEST_CASE("activation histogram") {
  SUBCASE("indicator map") {
    Tensor m = filled(10, 10, 0.0f);
    paint(m, {2, 2, 6, 6}, 1.0f);
    const auto h = activation_histogram({record(m, {BBox{2, 2, 6, 6}})});
    REQUIRE(h.bins.size() == 50);
    CHECK(h.bins.back().count_fg == 16);
    CHECK(h.bins.back().frac_fg == 1.0);
    CHECK(h.bins.front().count_bg == 84);
    CHECK(h.bins.front().frac_bg == 1.0);
    CHECK(h.separation == 1.0);
  }
  SUBCASE("constant map") {
    const auto h = activation_histogram({record(filled(10, 10, 0.5f), {BBox{2, 2, 6, 6}})});
    CHECK(h.separation == 0.0);
    for (const auto& b : h.bins) CHECK(b.frac_fg == b.frac_bg);
    CHECK(h.bins[25].count_fg == 16);
  }
  SUBCASE("overlapping gt boxes count a pixel once") {
    const auto h = activation_histogram({record(filled(10, 10, 0.2f), {BBox{0, 0, 4, 4}, BBox{2, 2, 6, 6}})});
    long long fg = 0, bg = 0;
    for (const auto& b : h.bins) fg += b.count_fg, bg += b.count_bg;
    CHECK(fg == 28);
    CHECK(bg == 72);
  }
  SUBCASE("csv header") {
    testing::TempDir dir("hist");
    write_histogram(activation_histogram({record(filled(4, 4, 0.5f), {BBox{0, 0, 2, 2}})}), dir / "h.csv");
    std::ifstream in(dir / "h.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == kHistogramHeader);
  }
}
