#pragma once

// Detection <-> ground-truth matching.
//
// greedy_match is the COCO protocol used by AP, F1 and LRP: detections walk
// in confidence order and each claims the best still-unmatched ground truth.
// agnostic_match is the category-blind argmax used by the naming error, where
// several detections may map to the same ground truth.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "hedgeval/mask.hpp"

namespace hedgeval {

inline constexpr int kNoMatch = -1;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Matrix pairwise_iou(std::span<const BinaryMask* const> rows,
                           std::span<const BinaryMask* const> cols) {
  Matrix out(rows.size(), cols.size());
  std::vector<std::size_t> col_area(cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) col_area[j] = cols[j]->area();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t a = rows[i]->area();
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out(i, j) = iou_from_counts(intersection_area(*rows[i], *cols[j]), a, col_area[j]);
    }
  }
  return out;
}

// Symmetric IoU matrix of one mask set with itself (diagonal 1 for nonempty masks).
inline Matrix self_iou(std::span<const BinaryMask* const> masks) {
  const std::size_t n = masks.size();
  Matrix out(n, n);
  std::vector<std::size_t> area(n);
  for (std::size_t i = 0; i < n; ++i) area[i] = masks[i]->area();
  for (std::size_t i = 0; i < n; ++i) {
    out(i, i) = area[i] > 0 ? 1.0 : 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = iou_from_counts(intersection_area(*masks[i], *masks[j]), area[i], area[j]);
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

// Indices ordered by descending score; equal scores keep input order.
inline std::vector<std::size_t> rank_by_confidence(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

struct MatchResult {
  std::vector<int> det_to_gt;    // kNoMatch when unmatched
  std::vector<double> det_iou;   // IoU of the match, 0 when unmatched
  std::vector<int> gt_to_det;    // kNoMatch when unmatched

  std::size_t true_positives() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(det_to_gt.begin(), det_to_gt.end(), [](int g) { return g != kNoMatch; }));
  }

  friend bool operator==(const MatchResult&, const MatchResult&) = default;
};

// `iou` rows are detections already in descending-confidence order, columns
// are ground truths. Ties on IoU go to the lowest ground-truth index.
inline MatchResult greedy_match(const Matrix& iou, double threshold) {
  MatchResult res;
  res.det_to_gt.assign(iou.rows(), kNoMatch);
  res.det_iou.assign(iou.rows(), 0.0);
  res.gt_to_det.assign(iou.cols(), kNoMatch);
  for (std::size_t d = 0; d < iou.rows(); ++d) {
    int best = kNoMatch;
    double best_iou = threshold;
    for (std::size_t g = 0; g < iou.cols(); ++g) {
      if (res.gt_to_det[g] != kNoMatch) continue;
      const double v = iou(d, g);
      if (v < threshold) continue;
      if (best == kNoMatch || v > best_iou) {
        best = static_cast<int>(g);
        best_iou = v;
      }
    }
    if (best != kNoMatch) {
      res.det_to_gt[d] = best;
      res.det_iou[d] = best_iou;
      res.gt_to_det[static_cast<std::size_t>(best)] = static_cast<int>(d);
    }
  }
  return res;
}

inline MatchResult greedy_match(std::span<const BinaryMask* const> sorted_dets,
                                std::span<const BinaryMask* const> gts, double threshold) {
  return greedy_match(pairwise_iou(sorted_dets, gts), threshold);
}

// g(D_j): argmax ground truth when its IoU reaches `threshold`, else kNoMatch.
inline std::vector<int> agnostic_match(const Matrix& iou, double threshold = 0.5) {
  std::vector<int> g(iou.rows(), kNoMatch);
  for (std::size_t d = 0; d < iou.rows(); ++d) {
    double best = -1.0;
    int arg = kNoMatch;
    for (std::size_t i = 0; i < iou.cols(); ++i) {
      if (iou(d, i) > best) {
        best = iou(d, i);
        arg = static_cast<int>(i);
      }
    }
    if (arg != kNoMatch && best >= threshold) g[d] = arg;
  }
  return g;
}

}  // namespace hedgeval
