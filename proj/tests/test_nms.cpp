#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hedgeval/nms.hpp"
#include "test_util.hpp"

using namespace hedgeval;
using hvtest::det;
using hvtest::rect;

namespace {

SemanticMaskSet semantic_of(int h, int w, std::initializer_list<std::pair<std::int64_t, BinaryMask>> masks) {
  SemanticMaskSet s(ImageId{1}, h, w);
  for (const auto& [c, m] : masks) s.set(CategoryId{c}, m);
  return s;
}

std::vector<Detection> random_scene(std::mt19937_64& rng, int n, int h, int w, int cats) {
  std::uniform_real_distribution<double> score(0.01, 1.0);
  std::uniform_int_distribution<int> cat(1, cats);
  std::vector<Detection> out;
  for (int k = 0; k < n; ++k) out.push_back(det(hvtest::random_rect(rng, h, w), score(rng), cat(rng)));
  return out;
}

}  // namespace

TEST(MaskNms, IdenticalPairKeepsFirst) {
  const auto m = rect(4, 4, 0, 0, 2, 2);
  const std::vector<Detection> d{det(m, 0.8), det(m, 0.9)};
  EXPECT_EQ(mask_nms(d, 0.5), (std::vector<std::size_t>{1}));
}

TEST(MaskNms, DifferentCategoriesBothKept) {
  const auto m = rect(4, 4, 0, 0, 2, 2);
  const std::vector<Detection> d{det(m, 0.9, 1), det(m, 0.8, 2)};
  EXPECT_EQ(mask_nms(d, 0.5).size(), 2u);
}

TEST(MaskNms, DisjointAllKept) {
  std::vector<Detection> d;
  for (int k = 0; k < 5; ++k) d.push_back(det(rect(10, 10, 2 * k, 0, 2 * k + 2, 10), 0.1 * (k + 1)));
  EXPECT_EQ(mask_nms(d, 0.5).size(), 5u);
}

TEST(MaskNms, KeptIsSubsetWithPairwiseLowIou) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto d = random_scene(rng, 12, 10, 10, 2);
    const auto kept = mask_nms(d, 0.4);
    for (std::size_t a = 0; a < kept.size(); ++a) {
      for (std::size_t b = a + 1; b < kept.size(); ++b) {
        if (d[kept[a]].category == d[kept[b]].category) EXPECT_LT(iou(d[kept[a]].mask, d[kept[b]].mask), 0.4);
      }
      if (a > 0) EXPECT_GE(d[kept[a - 1]].score, d[kept[a]].score);
    }
  }
}

TEST(MatrixNms, NoOverlapLeavesScores) {
  const std::vector<Detection> d{det(rect(4, 4, 0, 0, 2, 2), 0.9), det(rect(4, 4, 2, 2, 4, 4), 0.3)};
  const auto r = matrix_nms(d, DecayKind::kGaussian, 2.0, 0.0);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0], (Rescored{0, 0.9}));
  EXPECT_EQ(r[1], (Rescored{1, 0.3}));
}

TEST(MatrixNms, IdenticalDuplicateGaussian) {
  const auto m = rect(4, 4, 0, 0, 2, 2);
  const std::vector<Detection> d{det(m, 0.9), det(m, 0.7)};
  const auto r = matrix_nms(d, DecayKind::kGaussian, 2.0, 0.0);
  ASSERT_EQ(r.size(), 2u);
  // f(1) / f(0) with f(x) = exp(-x^2 / 2)
  EXPECT_NEAR(r[1].score, 0.7 * std::exp(-0.5), 1e-15);
}

TEST(MatrixNms, LinearFullOverlapZeroesDuplicate) {
  const auto m = rect(4, 4, 0, 0, 2, 2);
  const std::vector<Detection> d{det(m, 0.9), det(m, 0.7)};
  const auto r = matrix_nms(d, DecayKind::kLinear, 2.0, 0.0);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[1].score, 0.0);
}

TEST(MatrixNms, FloorRetainsLongTailComparedWithMaskNms) {
  // Ten copies of one mask: greedy NMS keeps one, matrix NMS at the default
  // floor keeps every copy whose decayed score clears 0.05.
  const auto m = rect(8, 8, 1, 1, 6, 6);
  std::vector<Detection> d;
  for (int k = 0; k < 10; ++k) d.push_back(det(m, 0.95 - 0.05 * k));
  const auto kept_mask = mask_nms(d, 0.5).size();
  const auto survivors = matrix_nms(d, DecayKind::kGaussian, 2.0, kMatrixDefaultFloor);
  EXPECT_EQ(kept_mask, 1u);
  std::size_t expected = 1;
  for (int k = 1; k < 10; ++k) {
    if ((0.95 - 0.05 * k) * std::exp(-0.5) >= kMatrixDefaultFloor) ++expected;
  }
  EXPECT_EQ(survivors.size(), expected);
  EXPECT_EQ(expected, 10u);
}

TEST(SoftNms, GaussianDecayAndFloor) {
  const auto m = rect(4, 4, 0, 0, 2, 2);
  const std::vector<Detection> d{det(m, 0.9), det(m, 0.7), det(rect(4, 4, 2, 2, 4, 4), 0.5)};
  const auto r = soft_nms(d, DecayKind::kGaussian, 2.0, 0.5, kSoftDefaultFloor);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].index, 0u);
  EXPECT_EQ(r[1].index, 2u);
  EXPECT_NEAR(r[2].score, 0.7 * std::exp(-0.5), 1e-15);
}

TEST(SoftNms, LinearOnlyAboveThreshold) {
  const auto a = rect(4, 4, 0, 0, 4, 2);
  const auto b = rect(4, 4, 0, 1, 4, 3);  // IoU 1/3 with a
  const std::vector<Detection> d{det(a, 0.9), det(b, 0.8)};
  const auto r = soft_nms(d, DecayKind::kLinear, 2.0, 0.5, 0.0);
  EXPECT_EQ(r[1].score, 0.8);
  const auto r2 = soft_nms(d, DecayKind::kLinear, 2.0, 0.3, 0.0);
  EXPECT_NEAR(r2[1].score, 0.8 * (1.0 - 1.0 / 3.0), 1e-15);
}

TEST(SoftAndMatrixNms, NeverIncreaseScores) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const auto d = random_scene(rng, 10, 8, 8, 2);
    for (auto kind : {DecayKind::kGaussian, DecayKind::kLinear}) {
      for (const auto& r : matrix_nms(d, kind, 2.0, 0.0)) EXPECT_LE(r.score, d[r.index].score);
      for (const auto& r : soft_nms(d, kind, 2.0, 0.3, 0.0)) EXPECT_LE(r.score, d[r.index].score);
    }
  }
}

TEST(SemanticSort, ScoreFormula) {
  // |D| = 4 inside M (pr = 1), |M| = 16: IoU = 0.25.
  const auto d = rect(4, 4, 0, 0, 2, 2);
  const auto s = semantic_of(4, 4, {{1, rect(4, 4, 0, 0, 4, 4)}});
  const std::vector<Detection> dets{det(d, 0.5)};
  EXPECT_DOUBLE_EQ(semantic_sort(dets, s)[0].score, 2.25);
  EXPECT_DOUBLE_EQ(semantic_sort(dets, s, true)[0].score, 0.75);
}

TEST(SemanticSort, DisjointFromSemanticMask) {
  const auto s = semantic_of(4, 4, {{1, rect(4, 4, 0, 0, 1, 1)}});
  const std::vector<Detection> dets{det(rect(4, 4, 2, 2, 4, 4), 0.4)};
  EXPECT_DOUBLE_EQ(semantic_sort(dets, s)[0].score, 1.4);
}

TEST(SemanticSort, EqualMasksKeepConfidenceOrder) {
  const auto m = rect(4, 4, 0, 0, 2, 2);
  const auto s = semantic_of(4, 4, {{1, m}});
  const std::vector<Detection> dets{det(m, 0.3), det(m, 0.9)};
  const auto r = semantic_sort(dets, s);
  EXPECT_EQ(r[0].index, 1u);
  EXPECT_EQ(r[1].index, 0u);
}

TEST(SemanticSort, AveragedScoresPreserveOrder) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto dets = random_scene(rng, 10, 8, 8, 2);
    SemanticMaskSet s(ImageId{1}, 8, 8);
    s.set(CategoryId{1}, hvtest::random_mask(rng, 8, 8, 0.5));
    s.set(CategoryId{2}, hvtest::random_mask(rng, 8, 8, 0.5));
    const auto a = semantic_sort(dets, s);
    const auto b = semantic_sort(dets, s, true);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k].index, b[k].index);
  }
}

TEST(SemanticSort, MissingCategoryMaskThrows) {
  const auto s = semantic_of(4, 4, {{1, rect(4, 4, 0, 0, 2, 2)}});
  const std::vector<Detection> dets{det(rect(4, 4, 0, 0, 2, 2), 0.5, 7)};
  EXPECT_THROW(semantic_sort(dets, s), Error);
}

TEST(SemanticNms, DuplicateDiscardedAfterSubtraction) {
  const auto obj = rect(6, 6, 1, 1, 4, 4);
  const auto s = semantic_of(6, 6, {{1, obj}});
  const std::vector<Detection> dets{det(obj, 0.9), det(obj, 0.8)};
  const auto ordered = semantic_sort(dets, s);
  EXPECT_EQ(semantic_nms(dets, ordered, s, 0.5), (std::vector<bool>{true, false}));
  EXPECT_EQ(s.at(CategoryId{1}), obj);  // caller's set untouched
}

TEST(SemanticNms, OtherCategoryWithOwnSupportKept) {
  const auto obj = rect(6, 6, 1, 1, 4, 4);
  const auto s = semantic_of(6, 6, {{1, obj}, {2, obj}});
  const std::vector<Detection> dets{det(obj, 0.9, 1), det(obj, 0.8, 2)};
  const auto keep = semantic_nms(dets, semantic_sort(dets, s), s, 0.5);
  EXPECT_EQ(keep, (std::vector<bool>{true, true}));
}

TEST(SemanticNms, WrongCategoryWithEmptySupportDiscarded) {
  const auto obj = rect(6, 6, 1, 1, 4, 4);
  const auto s = semantic_of(6, 6, {{1, obj}, {2, BinaryMask(6, 6)}});
  const std::vector<Detection> dets{det(obj, 0.9, 1), det(obj, 0.95, 2)};
  const auto ordered = semantic_sort(dets, s);
  const auto keep = semantic_nms(dets, ordered, s, 0.5);
  for (std::size_t k = 0; k < ordered.size(); ++k) {
    EXPECT_EQ(keep[k], dets[ordered[k].index].category == CategoryId{1});
  }
}

TEST(SemanticNms, KeptPairsNeverOverlapBeyondBudget) {
  std::mt19937_64 rng(44);
  const double thr = 0.5;
  for (int trial = 0; trial < 200; ++trial) {
    auto dets = random_scene(rng, 8, 10, 10, 1);
    BinaryMask all(10, 10);
    for (const auto& d : dets) unite_in_place(all, d.mask);
    const auto s = semantic_of(10, 10, {{1, all}});
    const auto ordered = semantic_sort(dets, s);
    const auto keep = semantic_nms(dets, ordered, s, thr);
    for (std::size_t a = 0; a < ordered.size(); ++a) {
      for (std::size_t b = a + 1; b < ordered.size(); ++b) {
        if (!keep[a] || !keep[b]) continue;
        const auto& x = dets[ordered[a].index].mask;
        const auto& y = dets[ordered[b].index].mask;
        const double bound = (1.0 - thr) * static_cast<double>(y.area());
        EXPECT_LE(static_cast<double>(intersection_area(x, y)), bound + 1e-9);
      }
    }
  }
}

TEST(SemanticNms, SmallFirstThenContainingLargerBothKept) {
  // The later detection's budget is what bounds the overlap, not the smaller area.
  const auto small = rect(6, 6, 0, 0, 2, 2);
  const auto big = rect(6, 6, 0, 0, 6, 6);
  const auto s = semantic_of(6, 6, {{1, big}});
  const std::vector<Detection> dets{det(small, 0.9), det(big, 0.8)};
  const std::vector<Rescored> ordered{{0, 0.0}, {1, 0.0}};
  EXPECT_EQ(semantic_nms(dets, ordered, s, 0.5), (std::vector<bool>{true, true}));
}

TEST(RunNms, SemanticEmitsAveragedOrOriginalScores) {
  const auto obj = rect(6, 6, 1, 1, 4, 4);
  const auto s = semantic_of(6, 6, {{1, obj}});
  const std::vector<Detection> dets{det(obj, 0.9), det(obj, 0.8)};
  NmsConfig cfg;
  const auto avg = run_nms_image(dets, cfg, &s);
  ASSERT_EQ(avg.size(), 1u);
  EXPECT_DOUBLE_EQ(avg[0].score, (0.9 + 1.0 + 0.0) / 3.0);
  cfg.averaged_scores = false;
  const auto orig = run_nms_image(dets, cfg, &s);
  EXPECT_EQ(orig[0].score, 0.9);
}

TEST(RunNms, RepeatableAndThreadIndependent) {
  std::mt19937_64 rng(8);
  DetectionSet set;
  std::vector<SemanticMaskSet> sem;
  for (int i = 0; i < 12; ++i) {
    auto d = random_scene(rng, 10, 12, 12, 2);
    SemanticMaskSet s(ImageId{i + 1}, 12, 12);
    s.set(CategoryId{1}, hvtest::random_mask(rng, 12, 12, 0.6));
    s.set(CategoryId{2}, hvtest::random_mask(rng, 12, 12, 0.6));
    set.per_image.push_back(std::move(d));
    sem.push_back(std::move(s));
  }
  for (auto method : {NmsMethod::kMask, NmsMethod::kMatrix, NmsMethod::kSoft, NmsMethod::kSemantic}) {
    NmsConfig cfg;
    cfg.method = method;
    const auto a = run_nms(set, cfg, sem, 1);
    const auto b = run_nms(set, cfg, sem, 4);
    const auto c = run_nms(set, cfg, sem, 4);
    for (std::size_t i = 0; i < a.per_image.size(); ++i) {
      ASSERT_EQ(a.per_image[i].size(), b.per_image[i].size());
      ASSERT_EQ(b.per_image[i].size(), c.per_image[i].size());
      for (std::size_t k = 0; k < a.per_image[i].size(); ++k) {
        EXPECT_EQ(a.per_image[i][k].score, b.per_image[i][k].score);
        EXPECT_EQ(a.per_image[i][k].mask, b.per_image[i][k].mask);
        EXPECT_EQ(b.per_image[i][k].score, c.per_image[i][k].score);
      }
    }
  }
}

TEST(RunNms, SemanticWithoutMasksIsConfigError) {
  DetectionSet set;
  set.per_image.push_back({det(rect(4, 4, 0, 0, 2, 2), 0.5)});
  NmsConfig cfg;
  EXPECT_THROW(run_nms(set, cfg), Error);
}

TEST(NmsConfig, DefaultsAndValidation) {
  NmsConfig cfg;
  cfg.method = NmsMethod::kMatrix;
  EXPECT_EQ(cfg.resolved_floor(), 0.05);
  cfg.method = NmsMethod::kSoft;
  EXPECT_EQ(cfg.resolved_floor(), 0.001);
  cfg.score_floor = 0.2;
  EXPECT_EQ(cfg.resolved_floor(), 0.2);
  cfg.iou_thr = 1.5;
  EXPECT_THROW(cfg.validate(), Error);
  EXPECT_THROW(parse_nms_method("box"), Error);
  EXPECT_EQ(parse_decay("linear"), DecayKind::kLinear);
}
