#pragma once

// COCO annotation / results JSON and the semantic-mask directory layout
// `<dir>/<image_id>/<category_id>.json` (one RLE object per file).

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hedgeval/dataset.hpp"
#include "hedgeval/error.hpp"
#include "hedgeval/mask.hpp"
#include "hedgeval/rle.hpp"

namespace hedgeval {

using Json = nlohmann::json;

namespace detail {

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kLoad, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::kLoad, path.string() + ": " + e.what());
  }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kLoad, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::kLoad, "write failed for " + path.string());
}

inline const Json& require(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw Error(ErrorKind::kLoad, where + ": missing field '" + key + "'");
  }
  return obj.at(key);
}

inline std::int64_t require_int(const Json& obj, const char* key, const std::string& where) {
  const Json& v = require(obj, key, where);
  if (!v.is_number_integer()) {
    throw Error(ErrorKind::kLoad, where + ": field '" + key + "' must be an integer");
  }
  return v.get<std::int64_t>();
}

}  // namespace detail

inline Json rle_to_json(const RleMask& rle) {
  return Json{{"size", {rle.height, rle.width}}, {"counts", compress_leb(rle)}};
}

// Decodes a COCO segmentation (compressed RLE, raw-count RLE or polygon list)
// against the owning image's dimensions.
inline BinaryMask segmentation_to_mask(const Json& seg, int height, int width,
                                       const std::string& where) {
  try {
    if (seg.is_object()) {
      const Json& size = detail::require(seg, "size", where);
      if (!size.is_array() || size.size() != 2 || size[0].get<int>() != height ||
          size[1].get<int>() != width) {
        throw Error(ErrorKind::kLoad, where + ": RLE size " + size.dump() +
                                          " does not match image " + std::to_string(height) +
                                          "x" + std::to_string(width));
      }
      const Json& counts = detail::require(seg, "counts", where);
      RleMask rle{height, width, {}};
      if (counts.is_string()) {
        rle = decompress_leb(counts.get<std::string>(), height, width);
      } else if (counts.is_array()) {
        for (const auto& c : counts) {
          if (!c.is_number_integer() || c.get<std::int64_t>() < 0) {
            throw Error(ErrorKind::kLoad, where + ": RLE counts must be non-negative integers");
          }
          rle.counts.push_back(c.get<std::uint32_t>());
        }
      } else {
        throw Error(ErrorKind::kLoad, where + ": RLE counts must be a string or an array");
      }
      return decode(rle);
    }
    if (seg.is_array()) {
      BinaryMask mask(height, width);
      for (const auto& poly : seg) {
        if (!poly.is_array() || poly.size() % 2 != 0) {
          throw Error(ErrorKind::kLoad, where + ": polygon must hold x,y pairs");
        }
        std::vector<Point2> pts;
        for (std::size_t i = 0; i < poly.size(); i += 2) {
          pts.push_back({poly[i].get<double>(), poly[i + 1].get<double>()});
        }
        unite_in_place(mask, rasterize_polygon(pts, height, width));
      }
      return mask;
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kLoad) throw;
    throw Error(ErrorKind::kLoad, where + ": " + e.what());
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::kLoad, where + ": " + e.what());
  }
  throw Error(ErrorKind::kLoad, where + ": unsupported segmentation");
}

inline std::array<int, 4> bounding_box(const BinaryMask& m) {
  int r0 = m.height(), c0 = m.width(), r1 = -1, c1 = -1;
  for (int c = 0; c < m.width(); ++c) {
    for (int r = 0; r < m.height(); ++r) {
      if (!m.get(r, c)) continue;
      r0 = std::min(r0, r);
      r1 = std::max(r1, r);
      c0 = std::min(c0, c);
      c1 = std::max(c1, c);
    }
  }
  if (r1 < 0) return {0, 0, 0, 0};
  return {c0, r0, c1 - c0 + 1, r1 - r0 + 1};
}

inline Dataset parse_ground_truth(const Json& doc) {
  const std::string where = "ground truth";
  std::vector<ImageInfo> images;
  for (const auto& im : detail::require(doc, "images", where)) {
    const std::string w = "image";
    ImageInfo info;
    info.id = ImageId{detail::require_int(im, "id", w)};
    const std::string wi = "image " + std::to_string(info.id.value);
    info.height = static_cast<int>(detail::require_int(im, "height", wi));
    info.width = static_cast<int>(detail::require_int(im, "width", wi));
    if (info.height < 1 || info.width < 1) throw Error(ErrorKind::kLoad, wi + ": bad dimensions");
    if (im.contains("file_name") && im["file_name"].is_string()) {
      info.file_name = im["file_name"].get<std::string>();
    }
    images.push_back(std::move(info));
  }
  std::vector<Category> categories;
  for (const auto& cat : detail::require(doc, "categories", where)) {
    Category c;
    c.id = CategoryId{detail::require_int(cat, "id", "category")};
    if (cat.contains("name") && cat["name"].is_string()) c.name = cat["name"].get<std::string>();
    categories.push_back(std::move(c));
  }
  Dataset ds(std::move(images), std::move(categories));
  for (const auto& ann : detail::require(doc, "annotations", where)) {
    const AnnotationId ann_id{detail::require_int(ann, "id", "annotation")};
    const std::string wa = "annotation " + std::to_string(ann_id.value);
    if (ann.contains("iscrowd") && ann["iscrowd"].is_number() && ann["iscrowd"].get<int>() != 0) {
      throw Error(ErrorKind::kLoad, wa + ": iscrowd annotations are not supported");
    }
    const ImageId image_id{detail::require_int(ann, "image_id", wa)};
    const CategoryId cat_id{detail::require_int(ann, "category_id", wa)};
    const auto pos = ds.find_image(image_id);
    if (!pos) {
      throw Error(ErrorKind::kLoad, wa + ": unknown image id " + std::to_string(image_id.value));
    }
    if (!ds.has_category(cat_id)) {
      throw Error(ErrorKind::kLoad, wa + ": unknown category id " + std::to_string(cat_id.value));
    }
    const auto& img = ds.images()[*pos];
    BinaryMask mask =
        segmentation_to_mask(detail::require(ann, "segmentation", wa), img.height, img.width, wa);
    ds.add_ground_truth({image_id, ann_id, cat_id, std::move(mask)});
  }
  return ds;
}

inline Dataset load_ground_truth(const std::filesystem::path& path) {
  return parse_ground_truth(detail::read_json_file(path));
}

inline Json ground_truth_to_json(const Dataset& ds) {
  Json images = Json::array();
  for (const auto& im : ds.images()) {
    images.push_back(
        {{"id", im.id.value}, {"height", im.height}, {"width", im.width}, {"file_name", im.file_name}});
  }
  Json categories = Json::array();
  for (const auto& c : ds.categories()) categories.push_back({{"id", c.id.value}, {"name", c.name}});
  Json annotations = Json::array();
  for (std::size_t i = 0; i < ds.image_count(); ++i) {
    for (const auto& gt : ds.ground_truth(i)) {
      const auto bb = bounding_box(gt.mask);
      annotations.push_back({{"id", gt.instance_id.value},
                             {"image_id", gt.image_id.value},
                             {"category_id", gt.category.value},
                             {"segmentation", rle_to_json(encode(gt.mask))},
                             {"area", gt.mask.area()},
                             {"bbox", {bb[0], bb[1], bb[2], bb[3]}},
                             {"iscrowd", 0}});
    }
  }
  return Json{{"images", std::move(images)},
              {"categories", std::move(categories)},
              {"annotations", std::move(annotations)}};
}

inline void write_ground_truth(const Dataset& ds, const std::filesystem::path& path) {
  detail::write_text_file(path, ground_truth_to_json(ds).dump() + "\n");
}

// Rejected records (score outside [0,1], empty masks) are counted on the
// returned set, never dropped silently.
inline DetectionSet parse_detections(const Json& doc, const Dataset& ds) {
  if (!doc.is_array()) throw Error(ErrorKind::kLoad, "detection results must be a JSON array");
  DetectionSet out;
  out.per_image.resize(ds.image_count());
  std::size_t index = 0;
  for (const auto& rec : doc) {
    const std::string w = "detection " + std::to_string(index++);
    const ImageId image_id{detail::require_int(rec, "image_id", w)};
    const CategoryId cat_id{detail::require_int(rec, "category_id", w)};
    const auto pos = ds.find_image(image_id);
    if (!pos) throw Error(ErrorKind::kLoad, w + ": unknown image id " + std::to_string(image_id.value));
    if (!ds.has_category(cat_id)) {
      throw Error(ErrorKind::kLoad, w + ": unknown category id " + std::to_string(cat_id.value));
    }
    const Json& score_field = detail::require(rec, "score", w);
    if (!score_field.is_number()) throw Error(ErrorKind::kLoad, w + ": score must be a number");
    const double score = score_field.get<double>();
    if (!(score >= 0.0 && score <= 1.0)) {
      ++out.rejected_score;
      continue;
    }
    const auto& img = ds.images()[*pos];
    BinaryMask mask =
        segmentation_to_mask(detail::require(rec, "segmentation", w), img.height, img.width, w);
    if (mask.empty()) {
      ++out.rejected_empty;
      continue;
    }
    out.per_image[*pos].push_back({image_id, cat_id, score, std::move(mask)});
  }
  return out;
}

inline DetectionSet load_detections(const std::filesystem::path& path, const Dataset& ds) {
  DetectionSet dets = parse_detections(detail::read_json_file(path), ds);
  if (dets.rejected_empty > 0) {
    std::cerr << "warning: " << path.string() << ": rejected " << dets.rejected_empty
              << " detection(s) with empty masks\n";
  }
  if (dets.rejected_score > 0) {
    std::cerr << "warning: " << path.string() << ": rejected " << dets.rejected_score
              << " detection(s) with scores outside [0,1]\n";
  }
  return dets;
}

inline Json detections_to_json(const DetectionSet& dets) {
  Json arr = Json::array();
  for (const auto& image_dets : dets.per_image) {
    for (const auto& d : image_dets) {
      arr.push_back({{"image_id", d.image_id.value},
                     {"category_id", d.category.value},
                     {"score", d.score},
                     {"segmentation", rle_to_json(encode(d.mask))}});
    }
  }
  return arr;
}

inline void write_detections(const DetectionSet& dets, const std::filesystem::path& path) {
  detail::write_text_file(path, detections_to_json(dets).dump() + "\n");
}

// ---------------------------------------------------------------------------
// Semantic masks

enum class SemanticSource { kDirectory, kDeriveFromGt, kDeriveFromDt };

struct SemanticSpec {
  SemanticSource source = SemanticSource::kDeriveFromGt;
  std::filesystem::path directory;
  double dt_floor = 0.5;  // derive-from-dt confidence floor

  static SemanticSpec parse(std::string_view text, double dt_floor = 0.5) {
    SemanticSpec spec;
    spec.dt_floor = dt_floor;
    if (text == "derive-from-gt") {
      spec.source = SemanticSource::kDeriveFromGt;
    } else if (text == "derive-from-dt") {
      spec.source = SemanticSource::kDeriveFromDt;
    } else {
      spec.source = SemanticSource::kDirectory;
      spec.directory = std::filesystem::path(std::string(text));
    }
    return spec;
  }
};

namespace detail {

inline std::vector<SemanticMaskSet> empty_semantic_sets(const Dataset& ds) {
  std::vector<SemanticMaskSet> sets;
  sets.reserve(ds.image_count());
  for (const auto& im : ds.images()) {
    SemanticMaskSet s(im.id, im.height, im.width);
    for (const auto& c : ds.categories()) s.set(c.id, BinaryMask(im.height, im.width));
    sets.push_back(std::move(s));
  }
  return sets;
}

}  // namespace detail

// Union of ground-truth instance masks per category.
inline std::vector<SemanticMaskSet> derive_semantic_from_gt(const Dataset& ds) {
  auto sets = detail::empty_semantic_sets(ds);
  for (std::size_t i = 0; i < ds.image_count(); ++i) {
    for (const auto& gt : ds.ground_truth(i)) unite_in_place(sets[i].at(gt.category), gt.mask);
  }
  return sets;
}

// Union of detection masks with score >= floor, per category.
inline std::vector<SemanticMaskSet> derive_semantic_from_dt(const Dataset& ds,
                                                            const DetectionSet& dets,
                                                            double floor) {
  auto sets = detail::empty_semantic_sets(ds);
  for (std::size_t i = 0; i < ds.image_count() && i < dets.per_image.size(); ++i) {
    for (const auto& d : dets.per_image[i]) {
      if (d.score >= floor) unite_in_place(sets[i].at(d.category), d.mask);
    }
  }
  return sets;
}

inline std::vector<SemanticMaskSet> read_semantic_directory(const std::filesystem::path& dir,
                                                            const Dataset& ds) {
  auto sets = detail::empty_semantic_sets(ds);
  for (std::size_t i = 0; i < ds.image_count(); ++i) {
    const auto& im = ds.images()[i];
    const auto image_dir = dir / std::to_string(im.id.value);
    if (!std::filesystem::is_directory(image_dir)) {
      throw Error(ErrorKind::kLoad,
                  "semantic masks: missing entry for image " + std::to_string(im.id.value));
    }
    for (const auto& c : ds.categories()) {
      const auto file = image_dir / (std::to_string(c.id.value) + ".json");
      if (!std::filesystem::exists(file)) continue;
      sets[i].set(c.id, segmentation_to_mask(detail::read_json_file(file), im.height, im.width,
                                             file.string()));
    }
  }
  return sets;
}

inline std::vector<SemanticMaskSet> load_semantic_masks(const SemanticSpec& spec, const Dataset& ds,
                                                        const DetectionSet* dets = nullptr) {
  switch (spec.source) {
    case SemanticSource::kDeriveFromGt:
      return derive_semantic_from_gt(ds);
    case SemanticSource::kDeriveFromDt:
      if (dets == nullptr) {
        throw Error(ErrorKind::kConfig, "derive-from-dt semantic masks need detections");
      }
      return derive_semantic_from_dt(ds, *dets, spec.dt_floor);
    case SemanticSource::kDirectory:
      return read_semantic_directory(spec.directory, ds);
  }
  throw Error(ErrorKind::kConfig, "unknown semantic source");
}

inline void write_semantic_masks(std::span<const SemanticMaskSet> sets,
                                 const std::filesystem::path& dir) {
  for (const auto& s : sets) {
    const auto image_dir = dir / std::to_string(s.image_id().value);
    std::filesystem::create_directories(image_dir);
    for (const auto& [cat, mask] : s.masks()) {
      detail::write_text_file(image_dir / (std::to_string(cat.value) + ".json"),
                              rle_to_json(encode(mask)).dump() + "\n");
    }
  }
}

}  // namespace hedgeval
