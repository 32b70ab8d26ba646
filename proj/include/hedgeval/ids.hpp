#pragma once

#include <compare>
#include <cstdint>
#include <functional>

namespace hedgeval {

template <typename Tag>
struct Id {
  std::int64_t value = 0;

  constexpr Id() = default;
  constexpr explicit Id(std::int64_t v) : value(v) {}
  constexpr auto operator<=>(const Id&) const = default;
};

using ImageId = Id<struct ImageTag>;
using CategoryId = Id<struct CategoryTag>;
using AnnotationId = Id<struct AnnotationTag>;

}  // namespace hedgeval

template <typename Tag>
struct std::hash<hedgeval::Id<Tag>> {
  std::size_t operator()(const hedgeval::Id<Tag>& id) const noexcept {
    return std::hash<std::int64_t>{}(id.value);
  }
};
