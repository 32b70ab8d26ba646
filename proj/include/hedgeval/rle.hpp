#pragma once

// COCO-compatible run-length encoding.
//
// Runs alternate background/foreground in column-major pixel order and always
// start with a (possibly empty) background run. The compressed string form is
// the one produced by the reference maskApi rleToString/rleFrString pair.

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hedgeval/error.hpp"
#include "hedgeval/mask.hpp"

namespace hedgeval {

struct RleMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint32_t> counts;

  friend bool operator==(const RleMask&, const RleMask&) = default;
};

namespace detail {

// First index >= pos whose bit equals `value`, or `limit` if none.
inline std::size_t next_with_value(std::span<const std::uint64_t> words, std::size_t pos,
                                   std::size_t limit, bool value) noexcept {
  while (pos < limit) {
    const std::size_t wi = pos >> 6;
    std::uint64_t w = value ? words[wi] : ~words[wi];
    w &= ~std::uint64_t{0} << (pos & 63);
    if (w != 0) {
      const std::size_t found = (wi << 6) + static_cast<std::size_t>(std::countr_zero(w));
      return found < limit ? found : limit;
    }
    pos = (wi + 1) << 6;
  }
  return limit;
}

}  // namespace detail

inline RleMask encode(const BinaryMask& mask) {
  RleMask rle{mask.height(), mask.width(), {}};
  const std::size_t total = mask.pixel_count();
  const auto words = mask.words();
  std::size_t pos = 0;
  bool value = false;
  while (pos < total) {
    const std::size_t next = detail::next_with_value(words, pos, total, !value);
    rle.counts.push_back(static_cast<std::uint32_t>(next - pos));
    pos = next;
    value = !value;
  }
  if (rle.counts.empty()) rle.counts.push_back(0);
  return rle;
}

inline BinaryMask decode(const RleMask& rle) {
  BinaryMask mask(rle.height, rle.width);
  const std::size_t total = mask.pixel_count();
  std::size_t sum = 0;
  for (auto c : rle.counts) sum += c;
  if (sum != total) {
    throw Error(ErrorKind::kMalformedRle, "run lengths sum to " + std::to_string(sum) +
                                              ", expected " + std::to_string(total));
  }
  std::size_t pos = 0;
  for (std::size_t i = 0; i < rle.counts.size(); ++i) {
    const std::size_t end = pos + rle.counts[i];
    if (i % 2 == 1) mask.fill_range(pos, end);
    pos = end;
  }
  return mask;
}

// LEB128-like text form: 5 data bits per character plus a continuation bit,
// offset by 48; counts past the third are stored as deltas against the
// count two positions back.
inline std::string compress_counts(std::span<const std::uint32_t> counts) {
  std::string out;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    long long x = counts[i];
    if (i > 2) x -= static_cast<long long>(counts[i - 2]);
    bool more = true;
    while (more) {
      long long c = x & 0x1f;
      x >>= 5;
      more = (c & 0x10) ? x != -1 : x != 0;
      if (more) c |= 0x20;
      out.push_back(static_cast<char>(c + 48));
    }
  }
  return out;
}

inline std::vector<std::uint32_t> decompress_counts(std::string_view s) {
  std::vector<std::uint32_t> counts;
  std::size_t p = 0;
  while (p < s.size()) {
    long long x = 0;
    int k = 0;
    bool more = true;
    while (more) {
      if (p >= s.size()) {
        throw Error(ErrorKind::kMalformedString, "truncated value at offset " + std::to_string(p));
      }
      const int ch = static_cast<unsigned char>(s[p]);
      if (ch < 48 || ch > 111) {
        throw Error(ErrorKind::kMalformedString,
                    "character " + std::to_string(ch) + " at offset " + std::to_string(p));
      }
      const long long c = ch - 48;
      if (k >= 12) throw Error(ErrorKind::kMalformedString, "value too long");
      x |= (c & 0x1f) << (5 * k);
      more = (c & 0x20) != 0;
      ++p;
      ++k;
      if (!more && (c & 0x10)) x |= -1LL << (5 * k);
    }
    if (counts.size() > 2) x += static_cast<long long>(counts[counts.size() - 2]);
    if (x < 0 || x > static_cast<long long>(UINT32_MAX)) {
      throw Error(ErrorKind::kMalformedString, "run length out of range: " + std::to_string(x));
    }
    counts.push_back(static_cast<std::uint32_t>(x));
  }
  return counts;
}

inline std::string compress_leb(const RleMask& rle) { return compress_counts(rle.counts); }

inline RleMask decompress_leb(std::string_view s, int height, int width) {
  return RleMask{height, width, decompress_counts(s)};
}

}  // namespace hedgeval
