#pragma once

// Dense binary instance masks and the pixel-set operations shared by every
// metric and NMS routine.
//
// Pixels are stored bit-packed in column-major (Fortran) order, the same
// order COCO run-length encoding walks, so RLE conversion is a linear scan
// over the words and set operations reduce to word-wise AND/ANDN/popcount.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hedgeval/error.hpp"

namespace hedgeval {

class BinaryMask {
 public:
  BinaryMask() = default;

  BinaryMask(int height, int width) : height_(height), width_(width) {
    if (height < 1 || width < 1) {
      throw Error(ErrorKind::kInvalidArgument,
                  "mask dimensions must be positive, got " + std::to_string(height) + "x" +
                      std::to_string(width));
    }
    words_.assign(word_count(pixel_count()), 0);
  }

  // Builds a mask from row strings of '0'/'1' (test fixtures, small demos).
  static BinaryMask from_rows(std::span<const std::string_view> rows) {
    if (rows.empty()) throw Error(ErrorKind::kInvalidArgument, "no rows");
    BinaryMask m(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
    for (int r = 0; r < m.height(); ++r) {
      const auto row = rows[static_cast<std::size_t>(r)];
      if (static_cast<int>(row.size()) != m.width()) {
        throw Error(ErrorKind::kDimensionMismatch, "ragged rows");
      }
      for (int c = 0; c < m.width(); ++c) {
        if (row[static_cast<std::size_t>(c)] == '1') m.set(r, c);
      }
    }
    return m;
  }

  static BinaryMask from_rows(std::initializer_list<std::string_view> rows) {
    return from_rows(std::span<const std::string_view>(rows.begin(), rows.size()));
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }

  bool get(int row, int col) const noexcept { return test_index(index(row, col)); }

  void set(int row, int col, bool value = true) noexcept { set_index(index(row, col), value); }

  // Column-major linear pixel index.
  bool test_index(std::size_t i) const noexcept { return (words_[i >> 6] >> (i & 63)) & 1U; }

  void set_index(std::size_t i, bool value = true) noexcept {
    const std::uint64_t bit = std::uint64_t{1} << (i & 63);
    if (value) {
      words_[i >> 6] |= bit;
    } else {
      words_[i >> 6] &= ~bit;
    }
  }

  // Sets pixels [begin, end) in column-major order.
  void fill_range(std::size_t begin, std::size_t end) noexcept {
    while (begin < end) {
      const std::size_t w = begin >> 6;
      const unsigned lo = static_cast<unsigned>(begin & 63);
      const std::size_t span = std::min<std::size_t>(end - begin, 64 - lo);
      const std::uint64_t bits = span == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << span) - 1) << lo;
      words_[w] |= bits;
      begin += span;
    }
  }

  std::size_t area() const noexcept {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  bool empty() const noexcept {
    return std::all_of(words_.begin(), words_.end(), [](std::uint64_t w) { return w == 0; });
  }

  std::span<const std::uint64_t> words() const noexcept { return words_; }
  std::span<std::uint64_t> words() noexcept { return words_; }

  bool same_shape(const BinaryMask& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

  static std::size_t word_count(std::size_t pixels) noexcept { return (pixels + 63) / 64; }

 private:
  std::size_t index(int row, int col) const noexcept {
    return static_cast<std::size_t>(col) * static_cast<std::size_t>(height_) +
           static_cast<std::size_t>(row);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint64_t> words_;
};

namespace detail {

inline void require_same_shape(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_shape(b)) {
    throw Error(ErrorKind::kDimensionMismatch,
                std::to_string(a.height()) + "x" + std::to_string(a.width()) + " vs " +
                    std::to_string(b.height()) + "x" + std::to_string(b.width()));
  }
}

}  // namespace detail

inline std::size_t intersection_area(const BinaryMask& a, const BinaryMask& b) {
  detail::require_same_shape(a, b);
  const auto wa = a.words();
  const auto wb = b.words();
  std::size_t n = 0;
  for (std::size_t i = 0; i < wa.size(); ++i) n += static_cast<std::size_t>(std::popcount(wa[i] & wb[i]));
  return n;
}

// IoU from a known intersection and the two areas; 0 when both are empty.
inline double iou_from_counts(std::size_t inter, std::size_t area_a, std::size_t area_b) noexcept {
  const std::size_t uni = area_a + area_b - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline double iou(const BinaryMask& a, const BinaryMask& b) {
  detail::require_same_shape(a, b);
  const auto wa = a.words();
  const auto wb = b.words();
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < wa.size(); ++i) {
    inter += static_cast<std::size_t>(std::popcount(wa[i] & wb[i]));
    uni += static_cast<std::size_t>(std::popcount(wa[i] | wb[i]));
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Fraction of d's pixels that also lie in m; 0 for an empty d.
inline double precision_against(const BinaryMask& d, const BinaryMask& m) {
  detail::require_same_shape(d, m);
  const auto wd = d.words();
  const auto wm = m.words();
  std::size_t inter = 0;
  std::size_t area = 0;
  for (std::size_t i = 0; i < wd.size(); ++i) {
    inter += static_cast<std::size_t>(std::popcount(wd[i] & wm[i]));
    area += static_cast<std::size_t>(std::popcount(wd[i]));
  }
  return area == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(area);
}

inline void subtract_in_place(BinaryMask& m, const BinaryMask& d) {
  detail::require_same_shape(m, d);
  auto wm = m.words();
  const auto wd = d.words();
  for (std::size_t i = 0; i < wm.size(); ++i) wm[i] &= ~wd[i];
}

inline BinaryMask subtract(BinaryMask m, const BinaryMask& d) {
  subtract_in_place(m, d);
  return m;
}

inline void unite_in_place(BinaryMask& m, const BinaryMask& d) {
  detail::require_same_shape(m, d);
  auto wm = m.words();
  const auto wd = d.words();
  for (std::size_t i = 0; i < wm.size(); ++i) wm[i] |= wd[i];
}

inline BinaryMask unite(BinaryMask m, const BinaryMask& d) {
  unite_in_place(m, d);
  return m;
}

// Shifts every set pixel by (drow, dcol); pixels leaving the frame are lost.
inline BinaryMask translate(const BinaryMask& m, int drow, int dcol) {
  BinaryMask out(m.height(), m.width());
  for (int c = 0; c < m.width(); ++c) {
    const int nc = c + dcol;
    if (nc < 0 || nc >= m.width()) continue;
    for (int r = 0; r < m.height(); ++r) {
      const int nr = r + drow;
      if (nr < 0 || nr >= m.height()) continue;
      if (m.get(r, c)) out.set(nr, nc);
    }
  }
  return out;
}

struct Point2 {
  double x = 0.0;  // column axis
  double y = 0.0;  // row axis
};

// Even-odd scanline fill sampled at pixel centres (col + 0.5, row + 0.5).
inline BinaryMask rasterize_polygon(std::span<const Point2> vertices, int height, int width) {
  if (vertices.size() < 3) {
    throw Error(ErrorKind::kInvalidArgument,
                "polygon needs at least 3 vertices, got " + std::to_string(vertices.size()));
  }
  BinaryMask m(height, width);
  std::vector<double> xs;
  const std::size_t n = vertices.size();
  for (int r = 0; r < height; ++r) {
    const double y = r + 0.5;
    xs.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const Point2 a = vertices[i];
      const Point2 b = vertices[(i + 1) % n];
      if ((a.y <= y) != (b.y <= y)) {
        xs.push_back(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
      }
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      // Columns whose centre lies in [xs[k], xs[k+1]).
      const int c0 = std::max(0, static_cast<int>(std::ceil(xs[k] - 0.5)));
      const int c1 = std::min(width, static_cast<int>(std::ceil(xs[k + 1] - 0.5)));
      for (int c = c0; c < c1; ++c) m.set(r, c);
    }
  }
  return m;
}

}  // namespace hedgeval
