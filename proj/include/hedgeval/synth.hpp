#pragma once

// Synthetic part-counting scenes: identical "nails" (rotated capsules) dropped
// one after another around the image centre, so later parts occlude earlier
// ones. Ground truth is each part's visible region. A perfect detector with
// controllable hedging turns the scenes into end-to-end metric fixtures.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "hedgeval/coco_io.hpp"
#include "hedgeval/dataset.hpp"
#include "hedgeval/error.hpp"
#include "hedgeval/mask.hpp"

namespace hedgeval {

struct SynthConfig {
  std::size_t n_images = 100;
  std::size_t parts_per_image = 10;
  int height = 256;
  int width = 256;
  double sigma_frac = 1.0 / 6.0;  // placement std-dev as a fraction of image size
  double length_min = 40.0;       // tip-to-tip capsule length, pixels
  double length_max = 80.0;
  double thickness_min = 8.0;     // capsule diameter, pixels
  double thickness_max = 14.0;
  std::size_t decoy_categories = 0;  // extra declared categories with no instances
  std::uint64_t seed = 0;
  std::size_t max_placement_attempts = 100000;

  void validate() const {
    if (parts_per_image < 1) throw Error(ErrorKind::kConfig, "parts_per_image must be >= 1");
    if (height < 1 || width < 1) throw Error(ErrorKind::kConfig, "image size must be positive");
    if (!(sigma_frac > 0.0)) throw Error(ErrorKind::kConfig, "sigma_frac must be > 0");
    if (!(thickness_min > 0.0) || thickness_min > thickness_max) {
      throw Error(ErrorKind::kConfig, "bad thickness range");
    }
    if (length_min < thickness_max || length_min > length_max) {
      throw Error(ErrorKind::kConfig, "length range must satisfy thickness_max <= length_min <= length_max");
    }
    if (length_max > std::min(height, width)) {
      throw Error(ErrorKind::kConfig, "part larger than image");
    }
  }
};

inline nlohmann::json to_json(const SynthConfig& c) {
  return {{"n_images", c.n_images},
          {"parts_per_image", c.parts_per_image},
          {"height", c.height},
          {"width", c.width},
          {"sigma_frac", c.sigma_frac},
          {"length_min", c.length_min},
          {"length_max", c.length_max},
          {"thickness_min", c.thickness_min},
          {"thickness_max", c.thickness_max},
          {"decoy_categories", c.decoy_categories},
          {"seed", c.seed},
          {"shape", "capsule"},
          {"category", "nail"}};
}

inline constexpr CategoryId kNailCategory{1};

struct Capsule {
  double cx = 0.0;
  double cy = 0.0;
  double angle = 0.0;   // radians in [0, pi)
  double length = 0.0;  // tip to tip
  double thickness = 0.0;

  double half_segment() const { return (length - thickness) / 2.0; }
  double radius() const { return thickness / 2.0; }

  std::array<double, 4> extent() const {  // x0, y0, x1, y1
    const double dx = std::cos(angle) * half_segment();
    const double dy = std::sin(angle) * half_segment();
    const double r = radius();
    return {cx - std::abs(dx) - r, cy - std::abs(dy) - r, cx + std::abs(dx) + r,
            cy + std::abs(dy) + r};
  }

  bool inside(int height, int width) const {
    const auto e = extent();
    return e[0] >= 0.0 && e[1] >= 0.0 && e[2] <= width && e[3] <= height;
  }

  // Pixel centre (col + 0.5, row + 0.5) within `radius` of the axis segment.
  bool covers(int row, int col) const {
    const double px = col + 0.5 - cx;
    const double py = row + 0.5 - cy;
    const double ux = std::cos(angle);
    const double uy = std::sin(angle);
    const double h = half_segment();
    const double t = std::clamp(px * ux + py * uy, -h, h);
    const double dx = px - t * ux;
    const double dy = py - t * uy;
    return dx * dx + dy * dy <= radius() * radius();
  }
};

struct SynthScene {
  std::vector<Capsule> parts;         // placement order
  std::vector<BinaryMask> visible;    // aligned with parts; may be empty
};

inline SynthScene generate_scene(const SynthConfig& cfg, std::size_t image_index) {
  std::seed_seq seq{static_cast<std::uint64_t>(cfg.seed), static_cast<std::uint64_t>(image_index)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> length(cfg.length_min, cfg.length_max);
  std::uniform_real_distribution<double> thickness(cfg.thickness_min, cfg.thickness_max);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::normal_distribution<double> cx(cfg.width / 2.0, cfg.sigma_frac * cfg.width);
  std::normal_distribution<double> cy(cfg.height / 2.0, cfg.sigma_frac * cfg.height);

  SynthScene scene;
  std::vector<int> label(static_cast<std::size_t>(cfg.height) * cfg.width, -1);
  for (std::size_t p = 0; p < cfg.parts_per_image; ++p) {
    Capsule cap;
    cap.length = length(rng);
    cap.thickness = thickness(rng);
    cap.angle = angle(rng);
    std::size_t attempts = 0;
    do {
      if (++attempts > cfg.max_placement_attempts) {
        throw Error(ErrorKind::kConfig, "could not place part inside the image");
      }
      cap.cx = cx(rng);
      cap.cy = cy(rng);
    } while (!cap.inside(cfg.height, cfg.width));

    const auto e = cap.extent();
    const int c0 = std::max(0, static_cast<int>(std::floor(e[0])));
    const int c1 = std::min(cfg.width - 1, static_cast<int>(std::ceil(e[2])));
    const int r0 = std::max(0, static_cast<int>(std::floor(e[1])));
    const int r1 = std::min(cfg.height - 1, static_cast<int>(std::ceil(e[3])));
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        if (cap.covers(r, c)) label[static_cast<std::size_t>(r) * cfg.width + c] = static_cast<int>(p);
      }
    }
    scene.parts.push_back(cap);
  }
  scene.visible.assign(scene.parts.size(), BinaryMask(cfg.height, cfg.width));
  for (int r = 0; r < cfg.height; ++r) {
    for (int c = 0; c < cfg.width; ++c) {
      const int l = label[static_cast<std::size_t>(r) * cfg.width + c];
      if (l >= 0) scene.visible[static_cast<std::size_t>(l)].set(r, c);
    }
  }
  return scene;
}

struct SynthOutput {
  Dataset dataset;
  std::vector<SemanticMaskSet> semantic;
};

// Image ids run 1..n_images, annotation ids from 1 in generation order; parts
// with no visible pixel are not annotated.
inline SynthOutput generate(const SynthConfig& cfg) {
  cfg.validate();
  std::vector<ImageInfo> images;
  for (std::size_t i = 0; i < cfg.n_images; ++i) {
    images.push_back({ImageId{static_cast<std::int64_t>(i + 1)}, cfg.height, cfg.width,
                      "synth_" + std::to_string(i + 1) + ".png"});
  }
  std::vector<Category> categories{{kNailCategory, "nail"}};
  for (std::size_t k = 0; k < cfg.decoy_categories; ++k) {
    categories.push_back({CategoryId{static_cast<std::int64_t>(k + 2)}, "decoy_" + std::to_string(k + 1)});
  }
  SynthOutput out{Dataset(std::move(images), std::move(categories)), {}};
  std::int64_t next_ann = 1;
  for (std::size_t i = 0; i < cfg.n_images; ++i) {
    auto scene = generate_scene(cfg, i);
    for (auto& m : scene.visible) {
      if (m.empty()) continue;
      out.dataset.add_ground_truth({ImageId{static_cast<std::int64_t>(i + 1)},
                                    AnnotationId{next_ann++}, kNailCategory, std::move(m)});
    }
  }
  out.semantic = derive_semantic_from_gt(out.dataset);
  return out;
}

inline void write_synth(const SynthOutput& out, const SynthConfig& cfg,
                        const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_ground_truth(out.dataset, dir / "annotations.json");
  write_semantic_masks(out.semantic, dir / "semantic");
  detail::write_text_file(dir / "config.json", to_json(cfg).dump(2) + "\n");
}

struct HedgingConfig {
  std::size_t spatial_copies = 0;  // k jittered duplicates per ground truth
  double confidence_step = 0.05;   // duplicate r gets confidence 1 - step * r
  int jitter_px = 1;               // base offset magnitude
  double category_noise = 0.0;     // probability of a wrong-label copy per ground truth
  std::uint64_t seed = 0;

  void validate(const Dataset& ds) const {
    if (1.0 - confidence_step * static_cast<double>(spatial_copies) <= 0.0 || confidence_step < 0.0) {
      throw Error(ErrorKind::kConfig, "confidence_step too large for the number of copies");
    }
    if (!(category_noise >= 0.0 && category_noise <= 1.0)) {
      throw Error(ErrorKind::kConfig, "category_noise must lie in [0,1]");
    }
    if (category_noise > 0.0 && ds.categories().size() < 2) {
      throw Error(ErrorKind::kConfig, "category noise needs at least two declared categories");
    }
  }
};

// Offset of the r-th duplicate (r >= 1): eight compass directions, growing by
// jitter_px every full turn.
inline std::pair<int, int> jitter_offset(std::size_t r, int jitter_px) {
  static constexpr std::array<std::pair<int, int>, 8> kDirs{
      {{0, 1}, {1, 0}, {0, -1}, {-1, 0}, {1, 1}, {-1, -1}, {1, -1}, {-1, 1}}};
  const auto [dr, dc] = kDirs[(r - 1) % 8];
  const int scale = jitter_px * static_cast<int>(1 + (r - 1) / 8);
  return {dr * scale, dc * scale};
}

// Every ground truth becomes a confidence-1.0 detection, optionally followed by
// jittered lower-confidence duplicates and a wrong-label copy.
inline DetectionSet perfect_detector(const Dataset& ds, const HedgingConfig& hedge = {}) {
  hedge.validate(ds);
  std::mt19937_64 rng(hedge.seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  DetectionSet out;
  out.per_image.resize(ds.image_count());
  for (std::size_t i = 0; i < ds.image_count(); ++i) {
    for (const auto& gt : ds.ground_truth(i)) {
      out.per_image[i].push_back({gt.image_id, gt.category, 1.0, gt.mask});
      for (std::size_t r = 1; r <= hedge.spatial_copies; ++r) {
        const auto [dr, dc] = jitter_offset(r, hedge.jitter_px);
        BinaryMask moved = translate(gt.mask, dr, dc);
        if (moved.empty()) continue;
        out.per_image[i].push_back(
            {gt.image_id, gt.category, 1.0 - hedge.confidence_step * static_cast<double>(r), std::move(moved)});
      }
      if (hedge.category_noise > 0.0 && coin(rng) < hedge.category_noise) {
        const auto& cats = ds.categories();
        std::uniform_int_distribution<std::size_t> pick(0, cats.size() - 2);
        std::size_t idx = pick(rng);
        if (idx >= ds.category_position(gt.category)) ++idx;
        out.per_image[i].push_back({gt.image_id, cats[idx].id, 1.0 - hedge.confidence_step / 2.0, gt.mask});
      }
    }
  }
  return out;
}

}  // namespace hedgeval
