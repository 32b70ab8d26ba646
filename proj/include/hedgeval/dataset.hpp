#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hedgeval/error.hpp"
#include "hedgeval/ids.hpp"
#include "hedgeval/mask.hpp"

namespace hedgeval {

struct ImageInfo {
  ImageId id;
  int height = 0;
  int width = 0;
  std::string file_name;
};

struct Category {
  CategoryId id;
  std::string name;
};

struct GroundTruthInstance {
  ImageId image_id;
  AnnotationId instance_id;
  CategoryId category;
  BinaryMask mask;
};

struct Detection {
  ImageId image_id;
  CategoryId category;
  double score = 0.0;
  BinaryMask mask;
};

// Images, categories and ground truth grouped by image. Per-image vectors are
// indexed by image position (the order images appear in the source file).
class Dataset {
 public:
  Dataset() = default;

  Dataset(std::vector<ImageInfo> images, std::vector<Category> categories)
      : images_(std::move(images)), categories_(std::move(categories)), gts_(images_.size()) {
    for (std::size_t i = 0; i < images_.size(); ++i) {
      if (!image_index_.emplace(images_[i].id, i).second) {
        throw Error(ErrorKind::kLoad, "duplicate image id " + std::to_string(images_[i].id.value));
      }
    }
    for (std::size_t i = 0; i < categories_.size(); ++i) {
      if (!category_index_.emplace(categories_[i].id, i).second) {
        throw Error(ErrorKind::kLoad,
                    "duplicate category id " + std::to_string(categories_[i].id.value));
      }
    }
  }

  const std::vector<ImageInfo>& images() const noexcept { return images_; }
  const std::vector<Category>& categories() const noexcept { return categories_; }
  std::size_t image_count() const noexcept { return images_.size(); }

  std::optional<std::size_t> find_image(ImageId id) const {
    auto it = image_index_.find(id);
    if (it == image_index_.end()) return std::nullopt;
    return it->second;
  }

  bool has_category(CategoryId id) const { return category_index_.contains(id); }

  std::size_t category_position(CategoryId id) const {
    auto it = category_index_.find(id);
    if (it == category_index_.end()) {
      throw Error(ErrorKind::kLoad, "unknown category id " + std::to_string(id.value));
    }
    return it->second;
  }

  const std::vector<GroundTruthInstance>& ground_truth(std::size_t image_pos) const {
    return gts_.at(image_pos);
  }

  // Validates image/category references and mask dimensions.
  void add_ground_truth(GroundTruthInstance gt) {
    const auto pos = find_image(gt.image_id);
    if (!pos) {
      throw Error(ErrorKind::kLoad, "annotation " + std::to_string(gt.instance_id.value) +
                                        ": unknown image id " + std::to_string(gt.image_id.value));
    }
    if (!has_category(gt.category)) {
      throw Error(ErrorKind::kLoad, "annotation " + std::to_string(gt.instance_id.value) +
                                        ": unknown category id " +
                                        std::to_string(gt.category.value));
    }
    const auto& img = images_[*pos];
    if (gt.mask.height() != img.height || gt.mask.width() != img.width) {
      throw Error(ErrorKind::kLoad, "annotation " + std::to_string(gt.instance_id.value) +
                                        ": mask size does not match image");
    }
    if (gt.mask.empty()) {
      throw Error(ErrorKind::kLoad,
                  "annotation " + std::to_string(gt.instance_id.value) + ": empty mask");
    }
    gts_[*pos].push_back(std::move(gt));
  }

  std::size_t ground_truth_count() const noexcept {
    std::size_t n = 0;
    for (const auto& v : gts_) n += v.size();
    return n;
  }

 private:
  std::vector<ImageInfo> images_;
  std::vector<Category> categories_;
  std::vector<std::vector<GroundTruthInstance>> gts_;
  std::unordered_map<ImageId, std::size_t> image_index_;
  std::unordered_map<CategoryId, std::size_t> category_index_;
};

// Detections grouped by image position, ingestion order preserved.
struct DetectionSet {
  std::vector<std::vector<Detection>> per_image;
  std::size_t rejected_score = 0;
  std::size_t rejected_empty = 0;

  std::size_t size() const noexcept {
    std::size_t n = 0;
    for (const auto& v : per_image) n += v.size();
    return n;
  }
};

// One binary mask per category for a single image.
class SemanticMaskSet {
 public:
  SemanticMaskSet() = default;
  SemanticMaskSet(ImageId image_id, int height, int width)
      : image_id_(image_id), height_(height), width_(width) {}

  ImageId image_id() const noexcept { return image_id_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }

  void set(CategoryId category, BinaryMask mask) {
    if (mask.height() != height_ || mask.width() != width_) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "semantic mask for category " + std::to_string(category.value) +
                      " does not match image " + std::to_string(image_id_.value));
    }
    masks_.insert_or_assign(category, std::move(mask));
  }

  bool contains(CategoryId category) const { return masks_.contains(category); }

  const BinaryMask& at(CategoryId category) const {
    auto it = masks_.find(category);
    if (it == masks_.end()) {
      throw Error(ErrorKind::kConfig, "no semantic mask for category " +
                                          std::to_string(category.value) + " in image " +
                                          std::to_string(image_id_.value));
    }
    return it->second;
  }

  BinaryMask& at(CategoryId category) {
    return const_cast<BinaryMask&>(std::as_const(*this).at(category));
  }

  const std::map<CategoryId, BinaryMask>& masks() const noexcept { return masks_; }

  friend bool operator==(const SemanticMaskSet&, const SemanticMaskSet&) = default;

 private:
  ImageId image_id_;
  int height_ = 0;
  int width_ = 0;
  std::map<CategoryId, BinaryMask> masks_;
};

}  // namespace hedgeval
