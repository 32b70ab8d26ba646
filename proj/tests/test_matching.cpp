#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "hedgeval/matching.hpp"
#include "hedgeval/oracles.hpp"
#include "test_util.hpp"

using namespace hedgeval;

namespace {

std::vector<const BinaryMask*> ptrs(const std::vector<BinaryMask>& v) {
  std::vector<const BinaryMask*> out;
  for (const auto& m : v) out.push_back(&m);
  return out;
}

}  // namespace

TEST(GreedyMatch, ExactDetectionMatches) {
  const std::vector<BinaryMask> d{BinaryMask::from_rows({"11", "00"})};
  const auto r = greedy_match(ptrs(d), ptrs(d), 0.5);
  EXPECT_EQ(r.det_to_gt[0], 0);
  EXPECT_EQ(r.det_iou[0], 1.0);
}

TEST(GreedyMatch, DuplicateBecomesFalsePositive) {
  const auto m = BinaryMask::from_rows({"11", "00"});
  const std::vector<BinaryMask> dets{m, m};
  const std::vector<BinaryMask> gts{m};
  const auto r = greedy_match(ptrs(dets), ptrs(gts), 0.5);
  EXPECT_EQ(r.det_to_gt, (std::vector<int>{0, kNoMatch}));
  EXPECT_EQ(r.gt_to_det, (std::vector<int>{0}));
  EXPECT_EQ(r.true_positives(), 1u);
}

TEST(GreedyMatch, PicksHighestIouThenLowestIndex) {
  Matrix iou(2, 3, 0.0);
  iou(0, 0) = 0.6;
  iou(0, 1) = 0.8;
  iou(0, 2) = 0.8;
  iou(1, 1) = 0.9;
  iou(1, 2) = 0.7;
  const auto r = greedy_match(iou, 0.5);
  EXPECT_EQ(r.det_to_gt, (std::vector<int>{1, 2}));
}

TEST(GreedyMatch, ThresholdIsInclusive) {
  Matrix iou(1, 1, 0.5);
  EXPECT_EQ(greedy_match(iou, 0.5).det_to_gt[0], 0);
  EXPECT_EQ(greedy_match(iou, 0.50001).det_to_gt[0], kNoMatch);
}

TEST(GreedyMatch, AgreesWithBruteForceOnRandomMasks) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> count(0, 5);
  std::uniform_real_distribution<double> thr(0.05, 0.95);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<BinaryMask> d, g;
    const int nd = count(rng), ng = count(rng);
    for (int k = 0; k < nd; ++k) d.push_back(hvtest::random_rect(rng, 8, 8));
    for (int k = 0; k < ng; ++k) g.push_back(hvtest::random_rect(rng, 8, 8));
    const double t = thr(rng);
    EXPECT_EQ(greedy_match(ptrs(d), ptrs(g), t), oracle::match_bruteforce(ptrs(d), ptrs(g), t));
  }
}

TEST(GreedyMatch, PerfectSetHasNoErrorsAtAnyThreshold) {
  std::mt19937_64 rng(5);
  std::vector<BinaryMask> g;
  for (int k = 0; k < 6; ++k) g.push_back(hvtest::rect(12, 12, 2 * k, 0, 2 * k + 2, 12));
  for (double t : {0.1, 0.5, 0.95, 1.0}) {
    const auto r = greedy_match(ptrs(g), ptrs(g), t);
    EXPECT_EQ(r.true_positives(), g.size());
  }
}

TEST(RankByConfidence, StableOnTies) {
  const std::vector<double> s{0.5, 0.9, 0.5, 0.9, 0.1};
  EXPECT_EQ(rank_by_confidence(s), (std::vector<std::size_t>{1, 3, 0, 2, 4}));
}

TEST(GreedyMatch, InvariantToInputOrderWithDistinctScores) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<BinaryMask> d, g;
    std::vector<double> s;
    for (int k = 0; k < 6; ++k) {
      d.push_back(hvtest::random_rect(rng, 10, 10));
      s.push_back(0.1 + 0.1 * k);
    }
    for (int k = 0; k < 4; ++k) g.push_back(hvtest::random_rect(rng, 10, 10));
    std::vector<std::size_t> perm(d.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);

    auto matched_set = [&](const std::vector<std::size_t>& order) {
      std::vector<double> sc;
      for (auto k : order) sc.push_back(s[k]);
      std::vector<const BinaryMask*> sorted;
      std::vector<std::size_t> original;
      for (auto r : rank_by_confidence(sc)) {
        sorted.push_back(&d[order[r]]);
        original.push_back(order[r]);
      }
      const auto res = greedy_match(sorted, ptrs(g), 0.3);
      std::vector<int> by_original(d.size(), kNoMatch);
      for (std::size_t r = 0; r < original.size(); ++r) by_original[original[r]] = res.det_to_gt[r];
      return by_original;
    };
    std::vector<std::size_t> identity(d.size());
    std::iota(identity.begin(), identity.end(), std::size_t{0});
    EXPECT_EQ(matched_set(identity), matched_set(perm));
  }
}

TEST(AgnosticMatch, Examples) {
  const std::vector<BinaryMask> g{hvtest::rect(6, 6, 0, 0, 2, 2), hvtest::rect(6, 6, 3, 3, 5, 5),
                                  hvtest::rect(6, 6, 0, 4, 6, 6)};
  const std::vector<BinaryMask> d{g[1]};
  EXPECT_EQ(agnostic_match(pairwise_iou(ptrs(d), ptrs(g))), (std::vector<int>{1}));

  Matrix low(1, 2, 0.0);
  low(0, 1) = 0.49;
  EXPECT_EQ(agnostic_match(low)[0], kNoMatch);
}

TEST(AgnosticMatch, TieGoesToLowestIndex) {
  // Overlapping ground truths (cols 0-2 and 1-3); the detection (cols 1-2)
  // has IoU 2/3 with both.
  const std::vector<BinaryMask> g{hvtest::rect(4, 4, 0, 0, 4, 3), hvtest::rect(4, 4, 0, 1, 4, 4)};
  const std::vector<BinaryMask> d{hvtest::rect(4, 4, 0, 1, 4, 3)};
  const auto m = pairwise_iou(ptrs(d), ptrs(g));
  ASSERT_EQ(m(0, 0), m(0, 1));
  ASSERT_EQ(m(0, 0), oracle::naive_iou(d[0], g[0]));
  ASSERT_GE(m(0, 0), 0.5);
  EXPECT_EQ(agnostic_match(m)[0], 0);
}

TEST(AgnosticMatch, IgnoresConfidenceAndManyToOneAllowed) {
  const auto a = hvtest::rect(4, 4, 0, 0, 2, 2);
  const std::vector<BinaryMask> g{a};
  const std::vector<BinaryMask> d{a, a, a};
  EXPECT_EQ(agnostic_match(pairwise_iou(ptrs(d), ptrs(g))), (std::vector<int>{0, 0, 0}));
}

TEST(PairwiseIou, SelfIouIsSymmetricWithUnitDiagonal) {
  std::mt19937_64 rng(8);
  std::vector<BinaryMask> v;
  for (int k = 0; k < 7; ++k) v.push_back(hvtest::random_rect(rng, 9, 9));
  const auto s = self_iou(ptrs(v));
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_EQ(s(i, i), 1.0);
    for (std::size_t j = 0; j < v.size(); ++j) {
      EXPECT_EQ(s(i, j), s(j, i));
      EXPECT_EQ(s(i, j), oracle::naive_iou(v[i], v[j]));
    }
  }
}
