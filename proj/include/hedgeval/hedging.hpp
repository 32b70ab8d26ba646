#pragma once

// Hedging measures: Duplicate Confusion (spatial hedging) and Naming Error
// (category hedging).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hedgeval/error.hpp"
#include "hedgeval/ids.hpp"
#include "hedgeval/matching.hpp"

namespace hedgeval {

// Overlap graph of the detections of one (image, category). Vertices carry
// confidences; an undirected edge joins detections with IoU >= threshold.
class DetectionGraph {
 public:
  DetectionGraph() = default;
  explicit DetectionGraph(std::vector<double> confidences)
      : tau_(std::move(confidences)), adj_(tau_.size() * tau_.size(), 0) {}

  // Induced graph over `members` (indices into `iou`/`scores`) at IoU >= threshold.
  static DetectionGraph from_iou(const Matrix& iou, std::span<const double> scores,
                                 std::span<const std::size_t> members, double threshold) {
    std::vector<double> tau;
    tau.reserve(members.size());
    for (auto i : members) tau.push_back(scores[i]);
    DetectionGraph g(std::move(tau));
    for (std::size_t a = 0; a < members.size(); ++a) {
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        if (iou(members[a], members[b]) >= threshold) g.add_edge(a, b);
      }
    }
    return g;
  }

  std::size_t size() const noexcept { return tau_.size(); }
  double confidence(std::size_t i) const noexcept { return tau_[i]; }
  std::span<const double> confidences() const noexcept { return tau_; }

  void add_edge(std::size_t i, std::size_t j) {
    if (i == j || i >= size() || j >= size()) {
      throw Error(ErrorKind::kInvalidArgument, "bad edge " + std::to_string(i) + "-" + std::to_string(j));
    }
    adj_[i * size() + j] = 1;
    adj_[j * size() + i] = 1;
  }

  bool has_edge(std::size_t i, std::size_t j) const noexcept { return adj_[i * size() + j] != 0; }

  std::vector<std::pair<std::size_t, std::size_t>> edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < size(); ++i) {
      for (std::size_t j = i + 1; j < size(); ++j) {
        if (has_edge(i, j)) out.emplace_back(i, j);
      }
    }
    return out;
  }

 private:
  std::vector<double> tau_;
  std::vector<unsigned char> adj_;
};

// All-pairs maximum-bottleneck connectivity, the bottleneck of a path being
// its weakest vertex confidence (endpoints included); 0 between components.
// A path's vertex minimum equals the minimum over its edges of
// min(tau_u, tau_v), so Kruskal over edges in decreasing strength assigns each
// newly joined pair of components its final value. The diagonal holds tau_i.
inline Matrix bottleneck_connectivity(const DetectionGraph& g) {
  const std::size_t m = g.size();
  Matrix c(m, m, 0.0);
  for (std::size_t i = 0; i < m; ++i) c(i, i) = g.confidence(i);

  struct Edge {
    double strength;
    std::size_t u;
    std::size_t v;
  };
  std::vector<Edge> edges;
  for (auto [u, v] : g.edges()) edges.push_back({std::min(g.confidence(u), g.confidence(v)), u, v});
  std::stable_sort(edges.begin(), edges.end(),
                   [](const Edge& a, const Edge& b) { return a.strength > b.strength; });

  std::vector<std::size_t> parent(m);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  std::vector<std::vector<std::size_t>> members(m);
  for (std::size_t i = 0; i < m; ++i) members[i] = {i};
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };

  for (const auto& e : edges) {
    std::size_t ru = find(e.u);
    std::size_t rv = find(e.v);
    if (ru == rv) continue;
    for (auto a : members[ru]) {
      for (auto b : members[rv]) {
        c(a, b) = e.strength;
        c(b, a) = e.strength;
      }
    }
    if (members[ru].size() < members[rv].size()) std::swap(ru, rv);
    members[ru].insert(members[ru].end(), members[rv].begin(), members[rv].end());
    members[rv].clear();
    parent[rv] = ru;
  }
  return c;
}

// (1/m) sum_i sum_{j != i} tau_j c_ij / tau_i; 0 for an empty graph.
inline double dc_single(const DetectionGraph& g) {
  const std::size_t m = g.size();
  if (m == 0) return 0.0;
  for (double t : g.confidences()) {
    if (!(t > 0.0)) throw Error(ErrorKind::kInvalidArgument, "duplicate confusion needs tau > 0");
  }
  const Matrix c = bottleneck_connectivity(g);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (j != i) row += g.confidence(j) * c(i, j);
    }
    total += row / g.confidence(i);
  }
  return total / static_cast<double>(m);
}

inline std::vector<double> threshold_range(double first, double last, double step) {
  std::vector<double> out;
  const int n = static_cast<int>(std::lround((last - first) / step));
  for (int i = 0; i <= n; ++i) out.push_back(first + step * i);
  return out;
}

struct DcConfig {
  std::vector<double> ious = threshold_range(0.50, 0.95, 0.05);
  std::vector<double> confidences = threshold_range(0.1, 0.9, 0.1);

  void validate() const {
    if (ious.empty() || confidences.empty()) {
      throw Error(ErrorKind::kConfig, "duplicate confusion needs non-empty threshold grids");
    }
    for (double t : ious) {
      if (!(t > 0.0 && t < 1.0)) throw Error(ErrorKind::kConfig, "IoU threshold outside (0,1)");
    }
    for (double v : confidences) {
      if (!(v > 0.0 && v < 1.0)) throw Error(ErrorKind::kConfig, "confidence threshold outside (0,1)");
    }
  }
};

// Detections of one (image, category) cell with their pairwise IoU.
struct DcCell {
  std::vector<double> scores;
  Matrix iou;
};

// Per-(t, v) DC of one cell, row-major |T| x |V|; nullopt where the
// confidence filter leaves the cell empty.
inline std::vector<std::optional<double>> dc_cell_grid(const DcCell& cell, const DcConfig& cfg) {
  std::vector<std::optional<double>> out(cfg.ious.size() * cfg.confidences.size());
  for (std::size_t vi = 0; vi < cfg.confidences.size(); ++vi) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < cell.scores.size(); ++i) {
      if (cell.scores[i] >= cfg.confidences[vi]) members.push_back(i);
    }
    if (members.empty()) continue;
    for (std::size_t ti = 0; ti < cfg.ious.size(); ++ti) {
      const auto g = DetectionGraph::from_iou(cell.iou, cell.scores, members, cfg.ious[ti]);
      out[ti * cfg.confidences.size() + vi] = dc_single(g);
    }
  }
  return out;
}

struct DcResult {
  double dc = 0.0;
  Matrix grid;                                   // |T| x |V| mean over non-empty cells
  std::vector<std::vector<std::size_t>> cells;   // |T| x |V| non-empty cell counts
};

// Mean over non-empty cells for each (t, v), then mean over the grid. A grid
// point with no non-empty cell contributes 0.
inline DcResult aggregate_dc(std::span<const std::vector<std::optional<double>>> cell_grids,
                             const DcConfig& cfg) {
  const std::size_t nt = cfg.ious.size();
  const std::size_t nv = cfg.confidences.size();
  DcResult r;
  r.grid = Matrix(nt, nv, 0.0);
  r.cells.assign(nt, std::vector<std::size_t>(nv, 0));
  for (const auto& cg : cell_grids) {
    for (std::size_t ti = 0; ti < nt; ++ti) {
      for (std::size_t vi = 0; vi < nv; ++vi) {
        const auto& v = cg[ti * nv + vi];
        if (!v) continue;
        r.grid(ti, vi) += *v;
        ++r.cells[ti][vi];
      }
    }
  }
  double total = 0.0;
  for (std::size_t ti = 0; ti < nt; ++ti) {
    for (std::size_t vi = 0; vi < nv; ++vi) {
      if (r.cells[ti][vi] > 0) r.grid(ti, vi) /= static_cast<double>(r.cells[ti][vi]);
      total += r.grid(ti, vi);
    }
  }
  r.dc = total / static_cast<double>(nt * nv);
  return r;
}

inline DcResult duplicate_confusion(std::span<const DcCell> cells, const DcConfig& cfg) {
  cfg.validate();
  std::vector<std::vector<std::optional<double>>> grids;
  grids.reserve(cells.size());
  for (const auto& c : cells) grids.push_back(dc_cell_grid(c, cfg));
  return aggregate_dc(grids, cfg);
}

// Detections of one image whose category-blind match disagrees with the
// matched ground truth's label. `iou` is detections x ground truths.
inline std::size_t naming_mismatches(const Matrix& iou, std::span<const CategoryId> det_labels,
                                     std::span<const CategoryId> gt_labels,
                                     double threshold = 0.5) {
  const auto g = agnostic_match(iou, threshold);
  std::size_t n = 0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (g[j] != kNoMatch && det_labels[j] != gt_labels[static_cast<std::size_t>(g[j])]) ++n;
  }
  return n;
}

struct NeResult {
  std::optional<double> ne;  // nullopt when there is no ground truth
  std::size_t mismatches = 0;
  std::size_t n_gt = 0;
};

inline NeResult naming_error(std::size_t mismatches, std::size_t n_gt) {
  NeResult r{std::nullopt, mismatches, n_gt};
  if (n_gt > 0) r.ne = static_cast<double>(mismatches) / static_cast<double>(n_gt);
  return r;
}

}  // namespace hedgeval
