#include <doctest.h>

#include <fstream>

#include "../tools/commands.hpp"
#include "test_support.hpp"
#include "wsol/csv.hpp"

using namespace wsol;
using testing::snapshot_tree;
using testing::TempDir;

namespace {

int run(std::vector<std::string> args) { return cli::run(args); }

std::string p(const TempDir& d, const std::string& s) { return (d / s).string(); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Runs `args` twice into the same output directory; the tree must not change.
void check_rerun(const std::vector<std::string>& args, const std::filesystem::path& out) {
  REQUIRE(run(args) == cli::kOk);
  const auto first = snapshot_tree(out);
  REQUIRE(!first.empty());
  REQUIRE(run(args) == cli::kOk);
  CHECK(snapshot_tree(out) == first);
  CHECK(first.count("run_config.txt") == 1);
}

}  // namespace

TEST_CASE("every subcommand is byte-reproducible and leaves inputs untouched") {
  TempDir d("cli");
  const std::vector<std::string> synth{"synth", "--out", p(d, "data"), "--n", "12", "--seed", "7", "--height", "32", "--width", "32"};
  check_rerun(synth, d / "data");
  const auto data = snapshot_tree(d / "data");
  const std::string manifest = p(d, "data/manifest.csv");

  check_rerun({"proposals", "--manifest", manifest, "--out", p(d, "prop"), "--write-images"}, d / "prop");
  const std::string proposals = p(d, "prop/proposals.csv");
  check_rerun({"pseudolabels", "--manifest", manifest, "--proposals", proposals, "--out", p(d, "pl")}, d / "pl");
  check_rerun({"train", "--manifest", manifest, "--proposals", proposals, "--pseudolabels", p(d, "pl/pseudolabels.csv"),
               "--out", p(d, "train"), "--steps", "30", "--crf-grid", "8", "--subsample-k", "20", "--lambda-class", "0.1"},
              d / "train");
  check_rerun({"eval", "--manifest", manifest, "--out", p(d, "eval"), "--checkpoint", p(d, "train/checkpoint"),
               "--proposals", proposals, "--thresholds", "20"},
              d / "eval");
  check_rerun({"eval", "--manifest", manifest, "--out", p(d, "base"), "--baseline", "attention"}, d / "base");
  check_rerun({"hist", "--manifest", manifest, "--out", p(d, "hist"), "--checkpoint", p(d, "train/checkpoint")}, d / "hist");

  CHECK(snapshot_tree(d / "data") == data);

  const auto prop = snapshot_tree(d / "prop");
  CHECK(prop.count("proposals_all.csv") == 1);
  CHECK(prop.count("scores.csv") == 1);
  CHECK(prop.at("proposals.csv").rfind("image_id,x0,y0,x1,y1,source_map,class_id,confidence\n", 0) == 0);
  CHECK(prop.at("scores.csv").rfind("image_id,proposal_index,class_id,score\n", 0) == 0);
  CHECK(snapshot_tree(d / "train").count("loss_trace.csv") == 1);
  CHECK(read_file(d / "eval/summary.csv").rfind("max_box_acc,", 0) == 0);
  CHECK(snapshot_tree(d / "hist").count("histogram.csv") == 1);

  SUBCASE("thread count does not change artifacts") {
    REQUIRE(run({"proposals", "--manifest", manifest, "--out", p(d, "prop4"), "--threads", "4", "--write-images"}) == cli::kOk);
    auto a = snapshot_tree(d / "prop"), b = snapshot_tree(d / "prop4");
    a.erase("run_config.txt");
    b.erase("run_config.txt");
    CHECK(a == b);
  }

  SUBCASE("precomputed scores drive selection") {
    REQUIRE(run({"proposals", "--manifest", manifest, "--out", p(d, "prop_ext"), "--scores", p(d, "prop/scores.csv")}) == cli::kOk);
    CHECK(read_file(d / "prop_ext/proposals.csv") == read_file(d / "prop/proposals.csv"));
  }

  SUBCASE("run_config lists sorted key=value lines") {
    const std::string cfg = read_file(d / "pl/run_config.txt");
    std::vector<std::string> keys;
    std::size_t pos = 0;
    while (pos < cfg.size()) {
      const auto nl = cfg.find('\n', pos);
      const auto line = cfg.substr(pos, nl - pos);
      REQUIRE(line.find('=') != std::string::npos);
      keys.push_back(line.substr(0, line.find('=')));
      pos = nl + 1;
    }
    CHECK(std::is_sorted(keys.begin(), keys.end()));
    CHECK(cfg.find("n_frac=0.1\n") != std::string::npos);
  }
}

TEST_CASE("usage errors exit with 1") {
  TempDir d("cli");
  CHECK(run({}) == cli::kUsage);
  CHECK(run({"frobnicate"}) == cli::kUsage);
  CHECK(run({"eval", "--manifest", p(d, "m.csv"), "--out", p(d, "o")}) == cli::kUsage);
  CHECK(run({"eval", "--manifest", p(d, "m.csv"), "--out", p(d, "o"), "--baseline", "cam"}) == cli::kUsage);
  CHECK(run({"synth"}) == cli::kUsage);
  CHECK(run({"synth", "--out", p(d, "s"), "--n", "lots"}) == cli::kUsage);
  CHECK(run({"proposals", "--manifest", p(d, "m.csv"), "--out", p(d, "o"), "--connectivity", "6"}) == cli::kUsage);
  CHECK(run({"synth", "--out", p(d, "s"), "--heads", "3"}) == cli::kUsage);
}

TEST_CASE("data errors exit with 2") {
  TempDir d("cli");
  CHECK(run({"proposals", "--manifest", p(d, "missing.csv"), "--out", p(d, "o")}) == cli::kData);
  csv::write_text(d / "bad.csv", "not,a,manifest\n");
  CHECK(run({"proposals", "--manifest", p(d, "bad.csv"), "--out", p(d, "o")}) == cli::kData);
  REQUIRE(run({"synth", "--out", p(d, "data"), "--n", "4", "--height", "24", "--width", "24"}) == cli::kOk);
  std::ofstream(d / "data/images/img_00000.tnsr", std::ios::binary) << "XXXX";
  CHECK(run({"proposals", "--manifest", p(d, "data/manifest.csv"), "--out", p(d, "o")}) == cli::kData);
}

TEST_CASE("numeric failures exit with 3") {
  TempDir d("cli");
  REQUIRE(run({"synth", "--out", p(d, "data"), "--n", "6", "--height", "24", "--width", "24"}) == cli::kOk);
  const std::string manifest = p(d, "data/manifest.csv");
  REQUIRE(run({"proposals", "--manifest", manifest, "--out", p(d, "prop")}) == cli::kOk);
  REQUIRE(run({"pseudolabels", "--manifest", manifest, "--proposals", p(d, "prop/proposals.csv"), "--out", p(d, "pl")}) == cli::kOk);
  CHECK(run({"train", "--manifest", manifest, "--proposals", p(d, "prop/proposals.csv"), "--pseudolabels",
             p(d, "pl/pseudolabels.csv"), "--out", p(d, "t"), "--lr", "1e300", "--steps", "20"}) == cli::kNumeric);
}
