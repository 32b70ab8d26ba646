#pragma once

// Duplicate suppression: greedy mask NMS, Matrix NMS, Soft-NMS, and the
// semantic sort + semantic NMS pair that treats each category's semantic mask
// as an occupancy budget.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hedgeval/dataset.hpp"
#include "hedgeval/error.hpp"
#include "hedgeval/mask.hpp"
#include "hedgeval/matching.hpp"
#include "hedgeval/parallel.hpp"

namespace hedgeval {

enum class NmsMethod { kMask, kMatrix, kSoft, kSemantic };
enum class DecayKind { kGaussian, kLinear };

inline NmsMethod parse_nms_method(std::string_view s) {
  if (s == "mask") return NmsMethod::kMask;
  if (s == "matrix") return NmsMethod::kMatrix;
  if (s == "soft") return NmsMethod::kSoft;
  if (s == "semantic") return NmsMethod::kSemantic;
  throw Error(ErrorKind::kConfig, "unknown NMS method '" + std::string(s) + "'");
}

inline const char* to_string(NmsMethod m) {
  switch (m) {
    case NmsMethod::kMask: return "mask";
    case NmsMethod::kMatrix: return "matrix";
    case NmsMethod::kSoft: return "soft";
    case NmsMethod::kSemantic: return "semantic";
  }
  return "?";
}

inline DecayKind parse_decay(std::string_view s) {
  if (s == "gaussian") return DecayKind::kGaussian;
  if (s == "linear") return DecayKind::kLinear;
  throw Error(ErrorKind::kConfig, "unknown decay '" + std::string(s) + "'");
}

inline const char* to_string(DecayKind d) {
  return d == DecayKind::kGaussian ? "gaussian" : "linear";
}

// Post-NMS score floors used by the soft baselines when none is given.
inline constexpr double kMatrixDefaultFloor = 0.05;
inline constexpr double kSoftDefaultFloor = 0.001;

struct NmsConfig {
  NmsMethod method = NmsMethod::kSemantic;
  double iou_thr = 0.5;
  std::optional<double> score_floor;  // method default when unset
  double occupancy_thr = 0.5;
  DecayKind decay = DecayKind::kGaussian;
  double sigma = 2.0;
  bool averaged_scores = true;  // semantic: emit (tau + pr + 1 - iou) / 3

  double resolved_floor() const {
    if (score_floor) return *score_floor;
    switch (method) {
      case NmsMethod::kMatrix: return kMatrixDefaultFloor;
      case NmsMethod::kSoft: return kSoftDefaultFloor;
      default: return 0.0;
    }
  }

  void validate() const {
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!unit(iou_thr) || !unit(occupancy_thr) || !unit(resolved_floor())) {
      throw Error(ErrorKind::kConfig, "NMS thresholds must lie in [0,1]");
    }
    if (!(sigma > 0.0)) throw Error(ErrorKind::kConfig, "sigma must be positive");
  }
};

struct Rescored {
  std::size_t index = 0;  // into the input detections
  double score = 0.0;

  friend bool operator==(const Rescored&, const Rescored&) = default;
};

namespace detail {

inline std::vector<double> scores_of(std::span<const Detection> dets) {
  std::vector<double> s;
  s.reserve(dets.size());
  for (const auto& d : dets) s.push_back(d.score);
  return s;
}

inline double decay_fn(DecayKind kind, double iou, double sigma) {
  return kind == DecayKind::kGaussian ? std::exp(-(iou * iou) / sigma) : 1.0 - iou;
}

}  // namespace detail

// Greedy per-category NMS: in descending score order keep a detection iff its
// IoU with every kept same-category detection is below iou_thr. Returns kept
// indices in score order.
inline std::vector<std::size_t> mask_nms(std::span<const Detection> dets, double iou_thr) {
  const auto scores = detail::scores_of(dets);
  const auto order = rank_by_confidence(scores);
  std::vector<std::size_t> area(dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) area[i] = dets[i].mask.area();
  std::vector<std::size_t> kept;
  for (auto k : order) {
    bool suppressed = false;
    for (auto j : kept) {
      if (dets[j].category != dets[k].category) continue;
      const double v = iou_from_counts(intersection_area(dets[j].mask, dets[k].mask), area[j], area[k]);
      if (v >= iou_thr) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(k);
  }
  return kept;
}

// Matrix NMS: decay_k = min over higher-scored same-category j of
// f(iou_jk) / f(comp_j), comp_j being j's largest IoU with any detection
// ranked above it; capped at 1. Survivors (score >= floor) in score order.
inline std::vector<Rescored> matrix_nms(std::span<const Detection> dets, DecayKind decay,
                                        double sigma, double score_floor) {
  const auto scores = detail::scores_of(dets);
  const auto order = rank_by_confidence(scores);
  const std::size_t n = order.size();
  std::vector<const BinaryMask*> masks;
  for (auto i : order) masks.push_back(&dets[i].mask);
  const Matrix iou = self_iou(masks);
  auto same_cat = [&](std::size_t a, std::size_t b) {
    return dets[order[a]].category == dets[order[b]].category;
  };

  std::vector<double> comp(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      if (same_cat(i, j)) comp[j] = std::max(comp[j], iou(i, j));
    }
  }
  std::vector<Rescored> out;
  for (std::size_t k = 0; k < n; ++k) {
    double factor = 1.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (!same_cat(j, k)) continue;
      const double num = detail::decay_fn(decay, iou(j, k), sigma);
      const double den = detail::decay_fn(decay, comp[j], sigma);
      if (den <= 0.0) continue;  // j itself fully overlapped; no information
      factor = std::min(factor, num / den);
    }
    const double s = scores[order[k]] * factor;
    if (s >= score_floor) out.push_back({order[k], s});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Rescored& a, const Rescored& b) { return a.score > b.score; });
  return out;
}

// Soft-NMS: repeatedly take the highest remaining score and decay the
// remaining same-category detections against it. Gaussian decay multiplies by
// exp(-iou^2 / sigma); linear multiplies by (1 - iou) once iou >= iou_thr.
inline std::vector<Rescored> soft_nms(std::span<const Detection> dets, DecayKind decay,
                                      double sigma, double iou_thr, double score_floor) {
  const std::size_t n = dets.size();
  std::vector<double> score = detail::scores_of(dets);
  std::vector<std::size_t> area(n);
  for (std::size_t i = 0; i < n; ++i) area[i] = dets[i].mask.area();
  std::vector<bool> done(n, false);
  std::vector<Rescored> out;
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!done[i] && (best == n || score[i] > score[best])) best = i;
    }
    if (best == n || score[best] < score_floor) break;
    done[best] = true;
    out.push_back({best, score[best]});
    for (std::size_t i = 0; i < n; ++i) {
      if (done[i] || dets[i].category != dets[best].category) continue;
      const double v =
          iou_from_counts(intersection_area(dets[best].mask, dets[i].mask), area[best], area[i]);
      if (decay == DecayKind::kGaussian) {
        score[i] *= std::exp(-(v * v) / sigma);
      } else if (v >= iou_thr) {
        score[i] *= 1.0 - v;
      }
    }
  }
  return out;
}

// Rescoring against the semantic mask of each detection's category:
// score = tau + precision(D, M_c) + (1 - IoU(D, M_c)), then a stable sort by
// decreasing score, original tau, then input order. With `averaged` the score
// is divided by 3, which preserves the order.
inline std::vector<Rescored> semantic_sort(std::span<const Detection> dets,
                                           const SemanticMaskSet& semantic, bool averaged = false) {
  std::vector<Rescored> out;
  out.reserve(dets.size());
  std::vector<std::pair<CategoryId, std::size_t>> area_cache;
  auto semantic_area = [&](CategoryId c) {
    for (const auto& [cat, a] : area_cache) {
      if (cat == c) return a;
    }
    const std::size_t a = semantic.at(c).area();
    area_cache.emplace_back(c, a);
    return a;
  };
  for (std::size_t k = 0; k < dets.size(); ++k) {
    const BinaryMask& m = semantic.at(dets[k].category);
    const std::size_t inter = intersection_area(dets[k].mask, m);
    const std::size_t area = dets[k].mask.area();
    const double pr = area == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(area);
    const double iou = iou_from_counts(inter, area, semantic_area(dets[k].category));
    double s = dets[k].score + pr + (1.0 - iou);
    if (averaged) s /= 3.0;
    out.push_back({k, s});
  }
  std::stable_sort(out.begin(), out.end(), [&](const Rescored& a, const Rescored& b) {
    if (a.score != b.score) return a.score > b.score;
    return dets[a.index].score > dets[b.index].score;
  });
  return out;
}

// Single ordered pass: keep D_k iff at least `thr` of its pixels are still
// unclaimed in M_{c_k}, then claim them. `semantic` is a working copy and is
// consumed. Flags align with `ordered`.
inline std::vector<bool> semantic_nms(std::span<const Detection> dets,
                                      std::span<const Rescored> ordered, SemanticMaskSet semantic,
                                      double thr) {
  std::vector<bool> keep(ordered.size(), false);
  for (std::size_t k = 0; k < ordered.size(); ++k) {
    const Detection& d = dets[ordered[k].index];
    BinaryMask& m = semantic.at(d.category);
    if (precision_against(d.mask, m) >= thr) {
      keep[k] = true;
      subtract_in_place(m, d.mask);
    }
  }
  return keep;
}

// NMS over one image's detections; returned detections carry their output
// scores and are ordered by them.
inline std::vector<Detection> run_nms_image(std::span<const Detection> dets, const NmsConfig& cfg,
                                            const SemanticMaskSet* semantic) {
  const double floor = cfg.resolved_floor();
  std::vector<Detection> out;
  auto emit = [&](std::size_t index, double score) {
    if (score < floor) return;
    Detection d = dets[index];
    d.score = score;
    out.push_back(std::move(d));
  };
  switch (cfg.method) {
    case NmsMethod::kMask:
      for (auto k : mask_nms(dets, cfg.iou_thr)) emit(k, dets[k].score);
      break;
    case NmsMethod::kMatrix:
      for (const auto& r : matrix_nms(dets, cfg.decay, cfg.sigma, floor)) emit(r.index, r.score);
      break;
    case NmsMethod::kSoft:
      for (const auto& r : soft_nms(dets, cfg.decay, cfg.sigma, cfg.iou_thr, floor)) {
        emit(r.index, r.score);
      }
      break;
    case NmsMethod::kSemantic: {
      if (semantic == nullptr) throw Error(ErrorKind::kConfig, "semantic NMS needs semantic masks");
      const auto ordered = semantic_sort(dets, *semantic, cfg.averaged_scores);
      const auto keep = semantic_nms(dets, ordered, *semantic, cfg.occupancy_thr);
      for (std::size_t k = 0; k < ordered.size(); ++k) {
        if (!keep[k]) continue;
        emit(ordered[k].index, cfg.averaged_scores ? ordered[k].score : dets[ordered[k].index].score);
      }
      break;
    }
  }
  return out;
}

// Applies NMS image by image. `semantic` (one set per image) is required for
// the semantic method and ignored otherwise.
inline DetectionSet run_nms(const DetectionSet& dets, const NmsConfig& cfg,
                            std::span<const SemanticMaskSet> semantic = {},
                            std::size_t threads = 1) {
  cfg.validate();
  if (cfg.method == NmsMethod::kSemantic && semantic.size() < dets.per_image.size()) {
    throw Error(ErrorKind::kConfig, "semantic NMS needs a semantic mask set for every image");
  }
  DetectionSet out;
  out.per_image.resize(dets.per_image.size());
  out.rejected_score = dets.rejected_score;
  out.rejected_empty = dets.rejected_empty;
  parallel_for(dets.per_image.size(), threads, [&](std::size_t i) {
    const SemanticMaskSet* sem = cfg.method == NmsMethod::kSemantic ? &semantic[i] : nullptr;
    out.per_image[i] = run_nms_image(dets.per_image[i], cfg, sem);
  });
  return out;
}

}  // namespace hedgeval
