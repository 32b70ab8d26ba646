#pragma once

// Dataset-level evaluation: per-image matching runs in parallel, every
// reduction afterwards walks images and categories in file order so the
// report is independent of the worker count.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hedgeval/coco_io.hpp"
#include "hedgeval/dataset.hpp"
#include "hedgeval/error.hpp"
#include "hedgeval/hedging.hpp"
#include "hedgeval/lrp.hpp"
#include "hedgeval/matching.hpp"
#include "hedgeval/parallel.hpp"
#include "hedgeval/pr_metrics.hpp"
#include "hedgeval/version.hpp"

#ifndef HEDGEVAL_WITH_VERIFY
#define HEDGEVAL_WITH_VERIFY 1
#endif

#if HEDGEVAL_WITH_VERIFY
#include "hedgeval/oracles.hpp"
#endif

namespace hedgeval {

enum class Metric { kAp, kMap, kF1, kDc, kNe, kLrp, kFpTpCurve };

inline Metric parse_metric(std::string_view s) {
  if (s == "ap") return Metric::kAp;
  if (s == "map") return Metric::kMap;
  if (s == "f1") return Metric::kF1;
  if (s == "dc") return Metric::kDc;
  if (s == "ne") return Metric::kNe;
  if (s == "lrp") return Metric::kLrp;
  if (s == "fp-tp-curve") return Metric::kFpTpCurve;
  throw Error(ErrorKind::kConfig, "unknown metric '" + std::string(s) + "'");
}

inline const char* to_string(Metric m) {
  switch (m) {
    case Metric::kAp: return "ap";
    case Metric::kMap: return "map";
    case Metric::kF1: return "f1";
    case Metric::kDc: return "dc";
    case Metric::kNe: return "ne";
    case Metric::kLrp: return "lrp";
    case Metric::kFpTpCurve: return "fp-tp-curve";
  }
  return "?";
}

inline std::set<Metric> all_metrics() {
  return {Metric::kAp, Metric::kMap, Metric::kF1, Metric::kDc, Metric::kNe, Metric::kLrp, Metric::kFpTpCurve};
}

struct EvalConfig {
  std::vector<double> ap_ious = threshold_range(0.50, 0.95, 0.05);
  std::size_t max_dets = 100;  // per (image, category), AP only
  double f1_iou = 0.5;
  double min_score = 0.0;      // F1 and fixed-cutoff LRP
  double lrp_iou = 0.5;
  double ne_iou = 0.5;
  double curve_iou = 0.75;
  std::vector<double> recall_bins = threshold_range(0.1, 1.0, 0.1);
  DcConfig dc;
  std::set<Metric> metrics = all_metrics();
  std::uint64_t seed = 0;
  bool verify = false;
  double verify_fraction = 0.01;

  bool wants(Metric m) const { return metrics.contains(m); }

  void validate() const {
    auto in_open_unit = [](double v) { return v > 0.0 && v < 1.0; };
    if (ap_ious.empty()) throw Error(ErrorKind::kConfig, "need at least one AP IoU threshold");
    for (double t : ap_ious) {
      if (!in_open_unit(t)) throw Error(ErrorKind::kConfig, "AP IoU threshold outside (0,1)");
    }
    if (!in_open_unit(f1_iou) || !in_open_unit(lrp_iou) || !in_open_unit(ne_iou) ||
        !in_open_unit(curve_iou)) {
      throw Error(ErrorKind::kConfig, "IoU thresholds must lie in (0,1)");
    }
    if (max_dets == 0) throw Error(ErrorKind::kConfig, "max_dets must be positive");
    if (!(min_score >= 0.0 && min_score <= 1.0)) throw Error(ErrorKind::kConfig, "min_score outside [0,1]");
    if (wants(Metric::kDc)) dc.validate();
  }
};

struct CategoryReport {
  CategoryId id;
  std::string name;
  std::size_t n_gt = 0;
  std::size_t n_dt = 0;
  std::optional<double> ap;    // mean over AP thresholds
  std::optional<double> ap50;
  std::optional<double> ap75;
  std::vector<std::optional<double>> ap_by_iou;
  LrpResult lrp;
  std::optional<double> olrp;
  std::vector<std::optional<double>> fp_tp_ratio;
};

struct LrpSummary {
  std::optional<double> lrp;
  std::optional<double> loc;
  std::optional<double> fp;
  std::optional<double> fn;
  std::optional<double> olrp;
};

struct VerifySummary {
  std::size_t images_checked = 0;
  std::size_t match_checks = 0;
  std::size_t dc_checks = 0;
  std::size_t ap_checks = 0;
};

struct MetricReport {
  EvalConfig config;
  std::size_t n_images = 0;
  std::size_t n_gt = 0;
  std::size_t n_dt = 0;
  std::size_t rejected_score = 0;
  std::size_t rejected_empty = 0;
  std::optional<double> map;
  std::optional<double> ap50;
  std::optional<double> ap75;
  F1Result f1;
  DcResult dc;
  NeResult ne;
  LrpSummary lrp;
  std::vector<CategoryReport> categories;
  std::optional<VerifySummary> verify;
};

namespace detail {

struct MatchFlag {
  bool tp = false;
  double iou = 0.0;
};

struct CellWork {
  CategoryId category;
  std::size_t n_gt = 0;
  std::vector<double> scores;                   // descending
  std::vector<std::vector<MatchFlag>> flags;    // [threshold][rank]
  std::vector<std::optional<double>> dc_grid;   // empty when no detection passes the DC floor
};

struct ImageWork {
  std::vector<CellWork> cells;  // categories in dataset order that have detections or ground truth
  std::size_t ne_mismatches = 0;
};

inline std::vector<double> unique_thresholds(const EvalConfig& cfg) {
  std::vector<double> t = cfg.ap_ious;
  for (double extra : {cfg.f1_iou, cfg.lrp_iou, cfg.curve_iou}) {
    if (std::find(t.begin(), t.end(), extra) == t.end()) t.push_back(extra);
  }
  return t;
}

inline std::size_t threshold_slot(const std::vector<double>& ts, double t) {
  return static_cast<std::size_t>(std::find(ts.begin(), ts.end(), t) - ts.begin());
}

inline ImageWork evaluate_image(const Dataset& ds, std::size_t image_pos,
                                const std::vector<Detection>& dets, const EvalConfig& cfg,
                                const std::vector<double>& thresholds) {
  ImageWork work;
  const auto& gts = ds.ground_truth(image_pos);
  std::vector<const BinaryMask*> det_masks;
  std::vector<const BinaryMask*> gt_masks;
  for (const auto& d : dets) det_masks.push_back(&d.mask);
  for (const auto& g : gts) gt_masks.push_back(&g.mask);
  const Matrix iou = pairwise_iou(det_masks, gt_masks);

  if (cfg.wants(Metric::kNe)) {
    std::vector<CategoryId> dl;
    std::vector<CategoryId> gl;
    for (const auto& d : dets) dl.push_back(d.category);
    for (const auto& g : gts) gl.push_back(g.category);
    work.ne_mismatches = naming_mismatches(iou, dl, gl, cfg.ne_iou);
  }

  const bool want_dc = cfg.wants(Metric::kDc) && !cfg.dc.confidences.empty();
  const double dc_floor =
      want_dc ? *std::min_element(cfg.dc.confidences.begin(), cfg.dc.confidences.end()) : 1.0;
  for (const auto& cat : ds.categories()) {
    std::vector<std::size_t> di;
    std::vector<std::size_t> gi;
    for (std::size_t k = 0; k < dets.size(); ++k) {
      if (dets[k].category == cat.id) di.push_back(k);
    }
    for (std::size_t k = 0; k < gts.size(); ++k) {
      if (gts[k].category == cat.id) gi.push_back(k);
    }
    if (di.empty() && gi.empty()) continue;

    CellWork cell;
    cell.category = cat.id;
    cell.n_gt = gi.size();
    std::vector<double> raw_scores;
    for (auto k : di) raw_scores.push_back(dets[k].score);
    const auto order = rank_by_confidence(raw_scores);
    Matrix sub(order.size(), gi.size());
    for (std::size_t r = 0; r < order.size(); ++r) {
      cell.scores.push_back(raw_scores[order[r]]);
      for (std::size_t c = 0; c < gi.size(); ++c) sub(r, c) = iou(di[order[r]], gi[c]);
    }
    for (double t : thresholds) {
      const auto m = greedy_match(sub, t);
      std::vector<MatchFlag> flags(order.size());
      for (std::size_t r = 0; r < order.size(); ++r) {
        flags[r] = {m.det_to_gt[r] != kNoMatch, m.det_iou[r]};
      }
      cell.flags.push_back(std::move(flags));
    }

    if (want_dc) {
      DcCell dc_cell;
      std::vector<const BinaryMask*> masks;
      for (std::size_t r = 0; r < order.size(); ++r) {
        if (cell.scores[r] < dc_floor) break;
        dc_cell.scores.push_back(cell.scores[r]);
        masks.push_back(&dets[di[order[r]]].mask);
      }
      if (!masks.empty()) {
        dc_cell.iou = self_iou(masks);
        cell.dc_grid = dc_cell_grid(dc_cell, cfg.dc);
      }
    }
    work.cells.push_back(std::move(cell));
  }
  return work;
}


}  // namespace detail

#if HEDGEVAL_WITH_VERIFY
// Re-runs a seeded random sample of images (at least one) through the
// brute-force oracles and throws ErrorKind::kVerify on any divergence.
inline VerifySummary verify_with_oracles(const Dataset& ds, const DetectionSet& dets,
                                         const EvalConfig& cfg) {
  VerifySummary summary;
  const std::size_t n = ds.image_count();
  if (n == 0) return summary;
  const auto want = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(cfg.verify_fraction * static_cast<double>(n))));
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(all.begin(), all.end(), rng);
  std::vector<std::size_t> sample(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(std::min(want, n)));
  std::sort(sample.begin(), sample.end());

  const auto thresholds = cfg.ap_ious;
  auto fail = [](const std::string& what) { throw Error(ErrorKind::kVerify, what); };

  // category -> threshold -> (ranked detections, n_gt) over the sample
  std::map<CategoryId, std::vector<std::pair<std::vector<RankedDetection>, std::size_t>>> curves;
  for (auto pos : sample) {
    const auto& image_dets = dets.per_image[pos];
    const auto& gts = ds.ground_truth(pos);
    for (const auto& cat : ds.categories()) {
      std::vector<const Detection*> cd;
      std::vector<const BinaryMask*> gm;
      for (const auto& d : image_dets) {
        if (d.category == cat.id) cd.push_back(&d);
      }
      for (const auto& g : gts) {
        if (g.category == cat.id) gm.push_back(&g.mask);
      }
      if (cd.empty() && gm.empty()) continue;
      std::vector<double> s;
      for (auto* d : cd) s.push_back(d->score);
      const auto order = rank_by_confidence(s);
      std::vector<const BinaryMask*> dm;
      std::vector<double> sorted_scores;
      for (auto k : order) {
        dm.push_back(&cd[k]->mask);
        sorted_scores.push_back(s[k]);
      }
      auto& per_t = curves[cat.id];
      per_t.resize(thresholds.size());
      for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
        const auto prod = greedy_match(dm, gm, thresholds[ti]);
        const auto ref = oracle::match_bruteforce(dm, gm, thresholds[ti]);
        ++summary.match_checks;
        if (!(prod == ref)) {
          fail("greedy matching diverges from the oracle on image " +
               std::to_string(ds.images()[pos].id.value) + ", category " +
               std::to_string(cat.id.value));
        }
        for (std::size_t r = 0; r < dm.size() && r < cfg.max_dets; ++r) {
          per_t[ti].first.push_back({sorted_scores[r], prod.det_to_gt[r] != kNoMatch});
        }
        per_t[ti].second += gm.size();
      }
      if (!dm.empty()) {
        const Matrix self = self_iou(dm);
        for (double v : cfg.dc.confidences) {
          std::vector<std::size_t> members;
          for (std::size_t r = 0; r < dm.size() && members.size() < 8; ++r) {
            if (sorted_scores[r] >= v) members.push_back(r);
          }
          if (members.empty()) continue;
          for (double t : cfg.dc.ious) {
            const auto g = DetectionGraph::from_iou(self, sorted_scores, members, t);
            const double a = dc_single(g);
            const double b = oracle::dc_bruteforce(g);
            ++summary.dc_checks;
            if (std::abs(a - b) > 1e-9) {
              fail("duplicate confusion diverges from the oracle on image " +
                   std::to_string(ds.images()[pos].id.value));
            }
          }
        }
      }
    }
    ++summary.images_checked;
  }
  for (const auto& [cat, per_t] : curves) {
    for (std::size_t ti = 0; ti < per_t.size(); ++ti) {
      const auto curve = build_pr_curve(per_t[ti].first, per_t[ti].second, cat, thresholds[ti]);
      const std::size_t n_flags = curve.points.size();
      auto flags = std::make_unique<bool[]>(n_flags + 1);
      for (std::size_t k = 0; k < n_flags; ++k) flags[k] = curve.points[k].is_tp;
      const auto a = average_precision(curve);
      const auto b = oracle::ap_naive(std::span<const bool>(flags.get(), n_flags), per_t[ti].second);
      ++summary.ap_checks;
      if (a.has_value() != b.has_value() || (a && std::abs(*a - *b) > 1e-12)) {
        fail("average precision diverges from the oracle for category " + std::to_string(cat.value));
      }
    }
  }
  return summary;
}
#endif

inline MetricReport evaluate(const Dataset& ds, const DetectionSet& dets, const EvalConfig& cfg,
                             std::size_t threads = 1) {
  cfg.validate();
  if (dets.per_image.size() != ds.image_count()) {
    throw Error(ErrorKind::kInvalidArgument, "detections are not grouped by this dataset's images");
  }
  const auto thresholds = detail::unique_thresholds(cfg);
  std::vector<detail::ImageWork> work(ds.image_count());
  parallel_for(ds.image_count(), threads, [&](std::size_t i) {
    work[i] = detail::evaluate_image(ds, i, dets.per_image[i], cfg, thresholds);
  });

  MetricReport rep;
  rep.config = cfg;
  rep.n_images = ds.image_count();
  rep.n_gt = ds.ground_truth_count();
  rep.n_dt = dets.size();
  rep.rejected_score = dets.rejected_score;
  rep.rejected_empty = dets.rejected_empty;

  const std::size_t f1_slot = detail::threshold_slot(thresholds, cfg.f1_iou);
  const std::size_t lrp_slot = detail::threshold_slot(thresholds, cfg.lrp_iou);
  const std::size_t curve_slot = detail::threshold_slot(thresholds, cfg.curve_iou);

  std::size_t f1_tp = 0;
  std::size_t f1_fp = 0;
  std::vector<std::optional<double>> all_aps;
  std::vector<std::optional<double>> aps50;
  std::vector<std::optional<double>> aps75;
  std::vector<std::vector<std::optional<double>>> dc_grids;

  for (const auto& cat : ds.categories()) {
    CategoryReport cr;
    cr.id = cat.id;
    cr.name = cat.name;
    std::vector<std::vector<RankedDetection>> ranked(cfg.ap_ious.size());
    std::vector<LrpSample> lrp_samples;
    std::vector<RankedDetection> curve_dets;
    for (const auto& w : work) {
      for (const auto& cell : w.cells) {
        if (cell.category != cat.id) continue;
        cr.n_gt += cell.n_gt;
        cr.n_dt += cell.scores.size();
        for (std::size_t ti = 0; ti < cfg.ap_ious.size(); ++ti) {
          const std::size_t limit = std::min(cfg.max_dets, cell.scores.size());
          for (std::size_t r = 0; r < limit; ++r) ranked[ti].push_back({cell.scores[r], cell.flags[ti][r].tp});
        }
        for (std::size_t r = 0; r < cell.scores.size(); ++r) {
          const auto& f1f = cell.flags[f1_slot][r];
          if (cell.scores[r] >= cfg.min_score) (f1f.tp ? f1_tp : f1_fp) += 1;
          const auto& lf = cell.flags[lrp_slot][r];
          lrp_samples.push_back({cell.scores[r], lf.tp, lf.iou});
          curve_dets.push_back({cell.scores[r], cell.flags[curve_slot][r].tp});
        }
      }
    }
    for (std::size_t ti = 0; ti < cfg.ap_ious.size(); ++ti) {
      const auto curve = build_pr_curve(ranked[ti], cr.n_gt, cat.id, cfg.ap_ious[ti]);
      const auto ap = average_precision(curve);
      cr.ap_by_iou.push_back(ap);
      all_aps.push_back(ap);
      if (std::abs(cfg.ap_ious[ti] - 0.5) < 1e-9) {
        cr.ap50 = ap;
        aps50.push_back(ap);
      }
      if (std::abs(cfg.ap_ious[ti] - 0.75) < 1e-9) {
        cr.ap75 = ap;
        aps75.push_back(ap);
      }
    }
    cr.ap = mean_ap(cr.ap_by_iou);
    if (cr.n_gt > 0 || !lrp_samples.empty()) {
      cr.lrp = lrp_at_cutoff(lrp_samples, cr.n_gt, cfg.min_score, cfg.lrp_iou);
      if (cr.n_gt > 0) cr.olrp = olrp(lrp_samples, cr.n_gt, cfg.lrp_iou).best.lrp;
    }
    if (cfg.wants(Metric::kFpTpCurve)) {
      const auto curve = build_pr_curve(curve_dets, cr.n_gt, cat.id, cfg.curve_iou);
      cr.fp_tp_ratio = fp_tp_ratio_curve(curve, cfg.recall_bins);
    }
    rep.categories.push_back(std::move(cr));
  }
  rep.map = mean_ap(all_aps);
  rep.ap50 = mean_ap(aps50);
  rep.ap75 = mean_ap(aps75);
  rep.f1 = f1_from_counts(f1_tp, f1_fp, rep.n_gt - std::min(rep.n_gt, f1_tp));

  // LRP components averaged over categories with ground truth.
  {
    std::vector<std::optional<double>> l, loc, fp, fn, ol;
    for (const auto& cr : rep.categories) {
      if (cr.n_gt == 0) continue;
      l.push_back(cr.lrp.lrp);
      loc.push_back(cr.lrp.loc);
      fp.push_back(cr.lrp.fp_rate);
      fn.push_back(cr.lrp.fn_rate);
      ol.push_back(cr.olrp);
    }
    rep.lrp = {mean_ap(l), mean_ap(loc), mean_ap(fp), mean_ap(fn), mean_ap(ol)};
  }

  std::size_t mismatches = 0;
  for (const auto& w : work) {
    mismatches += w.ne_mismatches;
    for (const auto& cell : w.cells) {
      if (!cell.dc_grid.empty()) dc_grids.push_back(cell.dc_grid);
    }
  }
  rep.ne = naming_error(mismatches, rep.n_gt);
  if (cfg.wants(Metric::kDc)) rep.dc = aggregate_dc(dc_grids, cfg.dc);

#if HEDGEVAL_WITH_VERIFY
  if (cfg.verify) rep.verify = verify_with_oracles(ds, dets, cfg);
#else
  if (cfg.verify) throw Error(ErrorKind::kConfig, "built without oracle verification support");
#endif
  return rep;
}

// Dataset-wide PR curve for one category at one IoU threshold, every
// detection included.
inline PrCurve category_pr_curve(const Dataset& ds, const DetectionSet& dets, CategoryId category,
                                 double iou_thr) {
  std::vector<RankedDetection> ranked;
  std::size_t n_gt = 0;
  for (std::size_t i = 0; i < ds.image_count() && i < dets.per_image.size(); ++i) {
    std::vector<const BinaryMask*> dm;
    std::vector<const BinaryMask*> gm;
    std::vector<double> scores;
    for (const auto& d : dets.per_image[i]) {
      if (d.category != category) continue;
      dm.push_back(&d.mask);
      scores.push_back(d.score);
    }
    for (const auto& g : ds.ground_truth(i)) {
      if (g.category == category) gm.push_back(&g.mask);
    }
    n_gt += gm.size();
    const auto order = rank_by_confidence(scores);
    std::vector<const BinaryMask*> sorted;
    for (auto k : order) sorted.push_back(dm[k]);
    const auto m = greedy_match(sorted, gm, iou_thr);
    for (std::size_t r = 0; r < order.size(); ++r) {
      ranked.push_back({scores[order[r]], m.det_to_gt[r] != kNoMatch});
    }
  }
  return build_pr_curve(ranked, n_gt, category, iou_thr);
}

// ---------------------------------------------------------------------------
// Report serialisation

inline constexpr std::string_view kReportSchema = "hedgeval-report/1";

namespace detail {

inline nlohmann::json opt(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json opt_vec(const std::vector<std::optional<double>>& v) {
  auto a = nlohmann::json::array();
  for (const auto& x : v) a.push_back(opt(x));
  return a;
}

inline nlohmann::json lrp_json(const LrpResult& r) {
  return {{"lrp", opt(r.lrp)}, {"lrp_loc", opt(r.loc)}, {"lrp_fp", opt(r.fp_rate)},
          {"lrp_fn", opt(r.fn_rate)}, {"tp", r.tp}, {"fp", r.fp}, {"fn", r.fn}};
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace detail

inline nlohmann::json config_to_json(const EvalConfig& cfg) {
  auto metrics = nlohmann::json::array();
  for (auto m : cfg.metrics) metrics.push_back(to_string(m));
  return {{"metrics", metrics},
          {"ap_ious", cfg.ap_ious},
          {"ap_interpolation", "coco-101"},
          {"max_dets", cfg.max_dets},
          {"f1_iou", cfg.f1_iou},
          {"min_score", cfg.min_score},
          {"lrp_iou", cfg.lrp_iou},
          {"ne_iou", cfg.ne_iou},
          {"curve_iou", cfg.curve_iou},
          {"recall_bins", cfg.recall_bins},
          {"dc_ious", cfg.dc.ious},
          {"dc_confidences", cfg.dc.confidences},
          {"dc_aggregation", "mean-over-nonempty-image-category-cells"},
          {"seed", cfg.seed},
          {"verify", cfg.verify}};
}

// Every metric value is emitted next to the thresholds that produced it.
inline nlohmann::json report_to_json(const MetricReport& r, bool with_timestamp = true) {
  using nlohmann::json;
  const auto& cfg = r.config;
  json m = json::object();
  if (cfg.wants(Metric::kMap) || cfg.wants(Metric::kAp)) {
    m["map"] = {{"value", detail::opt(r.map)}, {"ious", cfg.ap_ious}, {"max_dets", cfg.max_dets}};
    m["ap50"] = detail::opt(r.ap50);
    m["ap75"] = detail::opt(r.ap75);
  }
  if (cfg.wants(Metric::kF1)) {
    m["f1"] = {{"value", r.f1.f1},       {"precision", r.f1.precision}, {"recall", r.f1.recall},
               {"tp", r.f1.tp},          {"fp", r.f1.fp},               {"fn", r.f1.fn},
               {"iou", cfg.f1_iou},      {"min_score", cfg.min_score}};
  }
  if (cfg.wants(Metric::kDc)) {
    json grid = json::array();
    json cells = json::array();
    for (std::size_t ti = 0; ti < r.dc.grid.rows(); ++ti) {
      json row = json::array();
      for (std::size_t vi = 0; vi < r.dc.grid.cols(); ++vi) row.push_back(r.dc.grid(ti, vi));
      grid.push_back(row);
      cells.push_back(r.dc.cells[ti]);
    }
    m["dc"] = r.dc.dc;
    m["dc_grid"] = grid;
    m["dc_cells"] = cells;
    m["dc_ious"] = cfg.dc.ious;
    m["dc_confidences"] = cfg.dc.confidences;
  }
  if (cfg.wants(Metric::kNe)) {
    m["ne"] = detail::opt(r.ne.ne);
    m["ne_mismatch_count"] = r.ne.mismatches;
    m["n_gt"] = r.ne.n_gt;
    m["ne_iou"] = cfg.ne_iou;
  }
  if (cfg.wants(Metric::kLrp)) {
    m["lrp"] = detail::opt(r.lrp.lrp);
    m["lrp_loc"] = detail::opt(r.lrp.loc);
    m["lrp_fp"] = detail::opt(r.lrp.fp);
    m["lrp_fn"] = detail::opt(r.lrp.fn);
    m["olrp"] = detail::opt(r.lrp.olrp);
    m["lrp_iou"] = cfg.lrp_iou;
    m["lrp_cutoff"] = cfg.min_score;
  }
  json cats = json::array();
  for (const auto& c : r.categories) {
    json cj = {{"id", c.id.value}, {"name", c.name}, {"n_gt", c.n_gt}, {"n_dt", c.n_dt}};
    if (cfg.wants(Metric::kAp) || cfg.wants(Metric::kMap)) {
      cj["ap"] = detail::opt(c.ap);
      cj["ap50"] = detail::opt(c.ap50);
      cj["ap75"] = detail::opt(c.ap75);
      cj["ap_by_iou"] = detail::opt_vec(c.ap_by_iou);
    }
    if (cfg.wants(Metric::kLrp)) {
      cj["lrp"] = detail::lrp_json(c.lrp);
      cj["olrp"] = detail::opt(c.olrp);
    }
    if (cfg.wants(Metric::kFpTpCurve)) {
      cj["fp_tp_ratio"] = {{"iou", cfg.curve_iou},
                           {"recall_bins", cfg.recall_bins},
                           {"values", detail::opt_vec(c.fp_tp_ratio)}};
    }
    cats.push_back(std::move(cj));
  }
  json out = {{"schema", std::string(kReportSchema)},
              {"tool", "hedgeval"},
              {"version", std::string(kVersion)},
              {"config", config_to_json(cfg)},
              {"counts",
               {{"images", r.n_images},
                {"ground_truth", r.n_gt},
                {"detections", r.n_dt},
                {"rejected_score", r.rejected_score},
                {"rejected_empty", r.rejected_empty}}},
              {"metrics", m},
              {"categories", cats}};
  if (r.verify) {
    out["verify"] = {{"images_checked", r.verify->images_checked},
                     {"match_checks", r.verify->match_checks},
                     {"dc_checks", r.verify->dc_checks},
                     {"ap_checks", r.verify->ap_checks},
                     {"passed", true}};
  }
  if (with_timestamp) out["timestamp"] = detail::utc_timestamp();
  return out;
}

inline void write_report(const MetricReport& r, const std::filesystem::path& path,
                         bool with_timestamp = true) {
  detail::write_text_file(path, report_to_json(r, with_timestamp).dump(2) + "\n");
}

// Aligned-column summary for terminals; LRP components scaled by 100.
inline void print_report_table(const MetricReport& r, std::ostream& os) {
  auto fmt = [](const std::optional<double>& v, double scale = 1.0) {
    if (!v) return std::string("-");
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << *v * scale;
    return s.str();
  };
  const auto& cfg = r.config;
  os << std::left;
  auto row = [&](const std::string& k, const std::string& v) {
    os << "  " << std::setw(28) << k << v << "\n";
  };
  os << "hedgeval " << kVersion << "  images=" << r.n_images << " gt=" << r.n_gt
     << " detections=" << r.n_dt << "\n";
  if (cfg.wants(Metric::kMap) || cfg.wants(Metric::kAp)) {
    row("mAP@[.50:.95]", fmt(r.map));
    row("AP50", fmt(r.ap50));
    row("AP75", fmt(r.ap75));
  }
  if (cfg.wants(Metric::kF1)) {
    std::ostringstream k;
    k << "F1@" << cfg.f1_iou;
    row(k.str(), fmt(r.f1.f1) + "  (P " + fmt(r.f1.precision) + ", R " + fmt(r.f1.recall) + ")");
  }
  if (cfg.wants(Metric::kDc)) row("DC", fmt(r.dc.dc));
  if (cfg.wants(Metric::kNe)) {
    row("NE", fmt(r.ne.ne) + "  (" + std::to_string(r.ne.mismatches) + " mismatches)");
  }
  if (cfg.wants(Metric::kLrp)) {
    row("LRP x100", fmt(r.lrp.lrp, 100.0));
    row("LRP_Loc x100", fmt(r.lrp.loc, 100.0));
    row("LRP_FP x100", fmt(r.lrp.fp, 100.0));
    row("LRP_FN x100", fmt(r.lrp.fn, 100.0));
    row("oLRP x100", fmt(r.lrp.olrp, 100.0));
  }
  if (r.verify) {
    row("oracle verify", "passed (" + std::to_string(r.verify->images_checked) + " images)");
  }
}

}  // namespace hedgeval
