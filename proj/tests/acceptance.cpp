// Acceptance checks AC1-AC9. One line per criterion; exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hedgeval.hpp"
#include "hedgeval/oracles.hpp"

using namespace hedgeval;

namespace tol {
constexpr double kExact = 1e-12;           // "exactly" for values computed in floating point
constexpr double kTwoDecimals = 0.005;     // 101-point AP against a two-decimal quoted value
constexpr double kDcOracle = 1e-9;
constexpr double kWorkedDc = 1e-4;         // 1.0167 is quoted to four decimals
constexpr int kRandomGraphs = 2000;
constexpr double kMaskGrowthLow = 8.0;     // 16x quadratic trend, -50%
constexpr double kMaskGrowthHigh = 24.0;   // 16x quadratic trend, +50%
constexpr double kSemanticGrowthHigh = 6.0;
constexpr double kSpeedupAt1600 = 3.0;
}  // namespace tol

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void run(const char* id, const char* title, double budget_s, const std::function<Outcome()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (s > budget_s) {
    o.pass = false;
    o.detail += " [over time budget " + std::to_string(budget_s) + " s]";
  }
  if (!o.pass) ++failures;
  std::printf("%s %s  %s: %s (%.3f s)\n", id, o.pass ? "PASS" : "FAIL", title, o.detail.c_str(), s);
  std::fflush(stdout);
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

SynthOutput ac2_data() {
  SynthConfig cfg;
  cfg.n_images = 100;
  cfg.seed = 42;
  return generate(cfg);
}

HedgingConfig ac2_hedge() {
  HedgingConfig h;
  h.spatial_copies = 5;
  h.seed = 42;
  return h;
}

Outcome ac1() {
  auto curve_for = [](bool fp_first) {
    std::vector<RankedDetection> d;
    for (int k = 0; k < 10; ++k) {
      const bool fp = fp_first ? k == 0 : k == 9;
      d.push_back({1.0 - 0.05 * k, !fp});
    }
    return build_pr_curve(d, 10);
  };
  const auto first = curve_for(true);
  const auto last = curve_for(false);
  const double all_first = *average_precision(first, ApInterpolation::kAllPoint);
  const double all_last = *average_precision(last, ApInterpolation::kAllPoint);
  const double p101_first = *average_precision(first);
  const double p101_last = *average_precision(last);
  bool pass = std::abs(all_first - 0.81) <= tol::kExact && std::abs(all_last - 0.90) <= tol::kExact &&
              std::abs(p101_first - 0.81) < tol::kTwoDecimals && std::abs(p101_last - 0.90) < tol::kTwoDecimals;
  bool flags_first[10], flags_last[10];
  for (int k = 0; k < 10; ++k) {
    flags_first[k] = first.points[static_cast<std::size_t>(k)].is_tp;
    flags_last[k] = last.points[static_cast<std::size_t>(k)].is_tp;
  }
  pass = pass && *oracle::ap_naive(flags_first, 10) == p101_first && *oracle::ap_naive(flags_last, 10) == p101_last;
  return {pass, "FP first: area " + fmt(all_first) + ", 101-pt " + fmt(p101_first) + "; FP last: area " +
                    fmt(all_last) + ", 101-pt " + fmt(p101_last)};
}

Outcome ac2() {
  const auto data = ac2_data();
  const auto base = evaluate(data.dataset, perfect_detector(data.dataset), EvalConfig{});
  const auto hedged = evaluate(data.dataset, perfect_detector(data.dataset, ac2_hedge()), EvalConfig{});
  const bool pass = *base.map == 1.0 && *hedged.map == 1.0 && base.dc.dc == 0.0 && hedged.dc.dc > 0.0 &&
                    hedged.f1.f1 < 0.5;
  return {pass, "mAP " + fmt(*base.map) + " -> " + fmt(*hedged.map) + ", DC " + fmt(base.dc.dc) + " -> " +
                    fmt(hedged.dc.dc) + ", F1 " + fmt(base.f1.f1) + " -> " + fmt(hedged.f1.f1)};
}

Outcome ac3() {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> size(1, 8);
  std::uniform_real_distribution<double> conf(0.01, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < tol::kRandomGraphs; ++trial) {
    const int m = size(rng);
    std::vector<double> tau;
    for (int i = 0; i < m; ++i) tau.push_back(conf(rng));
    DetectionGraph g(tau);
    std::bernoulli_distribution edge(unit(rng));
    for (int i = 0; i < m; ++i) {
      for (int j = i + 1; j < m; ++j) {
        if (edge(rng)) g.add_edge(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      }
    }
    worst = std::max(worst, std::abs(dc_single(g) - oracle::dc_bruteforce(g)));
  }
  DetectionGraph tri({0.9, 0.6, 0.3});
  tri.add_edge(0, 1);
  tri.add_edge(0, 2);
  tri.add_edge(1, 2);
  DetectionGraph chain({0.9, 0.2, 0.8});
  chain.add_edge(0, 1);
  chain.add_edge(1, 2);
  const double tri_dc = dc_single(tri);
  const double chain_c13 = bottleneck_connectivity(chain)(0, 2);
  const bool pass = worst <= tol::kDcOracle && std::abs(tri_dc - 1.0167) <= tol::kWorkedDc &&
                    std::abs(tri_dc - oracle::dc_bruteforce(tri)) <= tol::kDcOracle && chain_c13 == 0.2 &&
                    oracle::connectivity_bruteforce(chain, 0, 2) == 0.2;
  return {pass, std::to_string(tol::kRandomGraphs) + " graphs, max |diff| " + fmt(worst, 3) + "; complete-3 DC " +
                    fmt(tri_dc, 8) + "; chain c13 " + fmt(chain_c13)};
}

Outcome ac4() {
  BinaryMask g1(6, 6), g2(6, 6), far(6, 6);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) g1.set(r, c);
  }
  for (int r = 3; r < 6; ++r) {
    for (int c = 3; c < 6; ++c) g2.set(r, c);
  }
  far.set(0, 5);
  const std::vector<const BinaryMask*> gts{&g1, &g2};
  const std::vector<CategoryId> gl{CategoryId{1}, CategoryId{1}};
  const std::vector<const BinaryMask*> dets{&g1, &g1, &far};
  const std::vector<CategoryId> dl{CategoryId{1}, CategoryId{2}, CategoryId{1}};
  const auto one = naming_error(naming_mismatches(pairwise_iou(dets, gts), dl, gl), 2);
  bool pass = one.ne && *one.ne == 0.5;

  std::string ks;
  for (std::size_t n = 1; n <= 5; ++n) {
    for (std::size_t k = 0; k <= 6; ++k) {
      std::vector<BinaryMask> masks;
      for (std::size_t i = 0; i < n; ++i) {
        BinaryMask m(10, 10);
        for (int c = 0; c < 10; ++c) {
          m.set(static_cast<int>(2 * i), c);
          m.set(static_cast<int>(2 * i + 1), c);
        }
        masks.push_back(m);
      }
      std::vector<const BinaryMask*> g;
      for (const auto& m : masks) g.push_back(&m);
      std::vector<const BinaryMask*> d(g.begin(), g.end());
      std::vector<CategoryId> dlab(n, CategoryId{1});
      for (std::size_t c = 0; c < k; ++c) {
        d.push_back(&masks[c % n]);
        dlab.push_back(CategoryId{2});
      }
      const auto ne = naming_error(naming_mismatches(pairwise_iou(d, g), dlab, std::vector<CategoryId>(n, CategoryId{1})), n);
      if (*ne.ne != static_cast<double>(k) / static_cast<double>(n)) {
        pass = false;
        ks += " k=" + std::to_string(k) + ",N=" + std::to_string(n) + "->" + fmt(*ne.ne);
      }
    }
  }
  return {pass, "1 mismatch / 2 GT -> " + fmt(*one.ne) + "; k/N grid (N<=5, k<=6) " + (ks.empty() ? "exact" : "off:" + ks)};
}

Outcome ac5() {
  const auto data = ac2_data();
  const auto hedged = perfect_detector(data.dataset, ac2_hedge());
  NmsConfig cfg;
  cfg.method = NmsMethod::kSemantic;
  cfg.occupancy_thr = 0.5;
  const auto semantic = derive_semantic_from_gt(data.dataset);
  const auto kept = run_nms(hedged, cfg, semantic, 1);
  std::size_t wrong_images = 0;
  std::string first_wrong;
  for (std::size_t i = 0; i < data.dataset.image_count(); ++i) {
    if (kept.per_image[i].size() != data.dataset.ground_truth(i).size()) {
      if (wrong_images++ == 0) {
        first_wrong = "image " + std::to_string(data.dataset.images()[i].id.value) + " keeps " +
                      std::to_string(kept.per_image[i].size()) + " for " +
                      std::to_string(data.dataset.ground_truth(i).size()) + " GT";
      }
    }
  }
  const auto r = evaluate(data.dataset, kept, EvalConfig{});
  const bool pass = wrong_images == 0 && r.f1.f1 == 1.0 && r.dc.dc == 0.0;
  std::string detail = std::to_string(hedged.size()) + " -> " + std::to_string(kept.size()) + " detections for " +
                       std::to_string(data.dataset.ground_truth_count()) + " GT, F1 " + fmt(r.f1.f1, 8) + ", DC " +
                       fmt(r.dc.dc);
  if (wrong_images > 0) detail += "; " + std::to_string(wrong_images) + " image(s) off, first: " + first_wrong;
  return {pass, detail};
}

Outcome ac6() {
  BenchConfig cfg;
  cfg.sizes = {100, 400, 1600};
  cfg.duplication = 4;
  cfg.seed = 42;
  cfg.repeats = 5;
  const auto rows = bench_nms(cfg);
  auto at = [&](std::size_t n, const std::string& m) {
    for (const auto& r : rows) {
      if (r.n == n && r.method == m) return r.seconds;
    }
    return 0.0;
  };
  const double mg1 = at(400, "mask") / at(100, "mask");
  const double mg2 = at(1600, "mask") / at(400, "mask");
  const double sg1 = at(400, "semantic") / at(100, "semantic");
  const double sg2 = at(1600, "semantic") / at(400, "semantic");
  const double speedup = at(1600, "mask") / at(1600, "semantic");
  const bool pass = mg1 >= tol::kMaskGrowthLow && mg1 <= tol::kMaskGrowthHigh && mg2 >= tol::kMaskGrowthLow &&
                    mg2 <= tol::kMaskGrowthHigh && sg1 <= tol::kSemanticGrowthHigh &&
                    sg2 <= tol::kSemanticGrowthHigh && speedup >= tol::kSpeedupAt1600;
  return {pass, "mask growth " + fmt(mg1, 3) + "x, " + fmt(mg2, 3) + "x; semantic growth " + fmt(sg1, 3) + "x, " +
                    fmt(sg2, 3) + "x; speedup at 1600 " + fmt(speedup, 3) + "x"};
}

Outcome ac7() {
  std::ifstream in(std::string(HEDGEVAL_FIXTURE_DIR) + "/rle_fixtures.json");
  if (!in) return {false, "fixture file missing"};
  const auto doc = nlohmann::json::parse(in);
  std::size_t ok = 0, total = 0;
  for (const auto& f : doc.at("fixtures")) {
    ++total;
    std::vector<std::string> rows = f.at("rows");
    std::vector<std::string_view> views(rows.begin(), rows.end());
    const auto mask = BinaryMask::from_rows(views);
    const std::string counts = f.at("counts");
    const bool dec = decode(decompress_leb(counts, f.at("height"), f.at("width"))) == mask;
    const bool enc = compress_leb(encode(mask)) == counts;
    ok += (dec && enc) ? 1 : 0;
  }
  return {total >= 5 && ok == total, std::to_string(ok) + "/" + std::to_string(total) +
                                         " reference strings decode pixel-exactly and re-encode byte-exactly"};
}

Outcome ac8() {
  const std::vector<double> perfect_ious{1.0, 1.0};
  const std::vector<double> one_tp{0.75};
  const auto a = lrp_from_matches(perfect_ious, 0, 0);
  const auto b = lrp_from_matches({}, 0, 3);
  const auto c = lrp_from_matches(one_tp, 1, 0, 0.5);
  bool pass = *a.lrp == 0.0 && *b.lrp == 1.0 && *c.lrp == 0.75;

  const auto data = ac2_data();
  auto dets = perfect_detector(data.dataset);
  const auto before = evaluate(data.dataset, dets, EvalConfig{});
  auto extra = dets.per_image[0].front();
  extra.score = 0.01;
  dets.per_image[0].push_back(extra);
  const auto after = evaluate(data.dataset, dets, EvalConfig{});
  pass = pass && *after.lrp.lrp > *before.lrp.lrp && *after.map == *before.map;
  return {pass, "examples " + fmt(*a.lrp) + ", " + fmt(*b.lrp) + ", " + fmt(*c.lrp) + "; low-confidence FP: LRP " +
                    fmt(*before.lrp.lrp) + " -> " + fmt(*after.lrp.lrp, 8) + ", mAP " + fmt(*before.map) + " -> " +
                    fmt(*after.map)};
}

Outcome ac9() {
  const auto data = ac2_data();
  HedgingConfig h = ac2_hedge();
  h.category_noise = 0.0;
  const auto dets = perfect_detector(data.dataset, h);
  const auto one = report_to_json(evaluate(data.dataset, dets, EvalConfig{}, 1), false).dump(2);
  const auto eight = report_to_json(evaluate(data.dataset, dets, EvalConfig{}, 8), false).dump(2);
  return {one == eight, std::to_string(one.size()) + "-byte reports " + (one == eight ? "identical" : "differ")};
}

}  // namespace

int main() {
  run("AC1", "toy AP reproduction", 1.0, ac1);
  run("AC2", "hedging invariance of AP", 60.0, ac2);
  run("AC3", "DC oracle equivalence", 60.0, ac3);
  run("AC4", "NE formula", 1.0, ac4);
  run("AC5", "semantic NMS on hedged synth data", 60.0, ac5);
  run("AC6", "NMS complexity scaling", 300.0, ac6);
  run("AC7", "RLE interop fixtures", 10.0, ac7);
  run("AC8", "LRP formula checks", 60.0, ac8);
  run("AC9", "thread-count determinism", 60.0, ac9);
  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
