#pragma once

// Timing harness comparing greedy mask NMS against the semantic pipeline on
// scenes of n detections built from n / dup objects, each repeated dup times
// at decreasing confidence.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "hedgeval/dataset.hpp"
#include "hedgeval/error.hpp"
#include "hedgeval/nms.hpp"
#include "hedgeval/synth.hpp"

namespace hedgeval {

struct BenchConfig {
  std::vector<std::size_t> sizes{100, 400, 1600};
  std::size_t duplication = 4;
  std::uint64_t seed = 42;
  std::size_t repeats = 5;
  int image_size = 256;
  double iou_thr = 0.5;
  double occupancy_thr = 0.5;

  void validate() const {
    if (sizes.empty()) throw Error(ErrorKind::kConfig, "bench needs at least one size");
    if (duplication < 1) throw Error(ErrorKind::kConfig, "duplication must be >= 1");
    if (repeats < 1) throw Error(ErrorKind::kConfig, "repeats must be >= 1");
    if (image_size < 32) throw Error(ErrorKind::kConfig, "image_size must be >= 32");
    for (auto n : sizes) {
      if (n < 1) throw Error(ErrorKind::kConfig, "bench sizes must be positive");
    }
  }
};

struct BenchScene {
  std::vector<Detection> detections;
  SemanticMaskSet semantic;
};

inline BenchScene make_bench_scene(std::size_t n, std::size_t dup, std::uint64_t seed, int size) {
  std::seed_seq seq{seed, static_cast<std::uint64_t>(n)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> pos(12.0, size - 12.0);
  std::uniform_real_distribution<double> angle(0.0, 3.141592653589793);
  std::uniform_real_distribution<double> len(14.0, 22.0);
  std::uniform_real_distribution<double> thick(5.0, 8.0);
  std::uniform_real_distribution<double> conf(0.5, 1.0);

  BenchScene scene{{}, SemanticMaskSet(ImageId{1}, size, size)};
  BinaryMask all(size, size);
  const std::size_t objects = (n + dup - 1) / dup;
  for (std::size_t o = 0; o < objects && scene.detections.size() < n; ++o) {
    Capsule cap{pos(rng), pos(rng), angle(rng), len(rng), thick(rng)};
    BinaryMask m(size, size);
    for (int r = 0; r < size; ++r) {
      for (int c = 0; c < size; ++c) {
        if (cap.covers(r, c)) m.set(r, c);
      }
    }
    unite_in_place(all, m);
    double tau = conf(rng);
    for (std::size_t k = 0; k < dup && scene.detections.size() < n; ++k) {
      scene.detections.push_back({ImageId{1}, kNailCategory, tau, m});
      tau *= 0.9;
    }
  }
  scene.semantic.set(kNailCategory, std::move(all));
  return scene;
}

struct BenchRow {
  std::size_t n = 0;
  std::string method;
  double seconds = 0.0;  // median over repeats
  std::size_t kept = 0;
};

namespace detail {

template <class Fn>
double median_seconds(std::size_t repeats, Fn&& fn) {
  std::vector<double> t;
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

}  // namespace detail

inline std::vector<BenchRow> bench_nms(const BenchConfig& cfg) {
  cfg.validate();
  std::vector<BenchRow> rows;
  for (auto n : cfg.sizes) {
    const auto scene = make_bench_scene(n, cfg.duplication, cfg.seed, cfg.image_size);
    std::size_t kept = 0;
    const double mask_s = detail::median_seconds(cfg.repeats, [&] {
      kept = mask_nms(scene.detections, cfg.iou_thr).size();
    });
    rows.push_back({n, "mask", mask_s, kept});
    const double sem_s = detail::median_seconds(cfg.repeats, [&] {
      const auto ordered = semantic_sort(scene.detections, scene.semantic);
      const auto keep = semantic_nms(scene.detections, ordered, scene.semantic, cfg.occupancy_thr);
      kept = static_cast<std::size_t>(std::count(keep.begin(), keep.end(), true));
    });
    rows.push_back({n, "semantic", sem_s, kept});
  }
  return rows;
}

inline void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& os) {
  os << "n,method,seconds,kept\n";
  for (const auto& r : rows) os << r.n << ',' << r.method << ',' << r.seconds << ',' << r.kept << '\n';
}

}  // namespace hedgeval
