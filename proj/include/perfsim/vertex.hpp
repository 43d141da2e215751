#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <initializer_list>
#include <ostream>
#include <span>
#include <unordered_set>
#include <vector>

#include "perfsim/error.hpp"

namespace perfsim {

/// A point of Z^d with d in {1,2,3}. Unused trailing coordinates stay zero,
/// so comparison and hashing can look at all three slots.
class Vertex {
 public:
  static constexpr int max_dimension = 3;

  Vertex() = default;

  explicit Vertex(int dimension) : dim_(check_dim(dimension)) {}

  Vertex(std::initializer_list<std::int64_t> coords) : dim_(check_dim(static_cast<int>(coords.size()))) {
    std::copy(coords.begin(), coords.end(), c_.begin());
  }

  static Vertex from_span(std::span<const std::int64_t> coords) {
    Vertex v(static_cast<int>(coords.size()));
    std::copy(coords.begin(), coords.end(), v.c_.begin());
    return v;
  }

  static Vertex origin(int dimension) { return Vertex(dimension); }

  int dimension() const noexcept { return dim_; }
  std::int64_t operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
  std::int64_t& operator[](int i) { return c_[static_cast<std::size_t>(i)]; }

  std::int64_t l1_norm() const noexcept {
    std::int64_t n = 0;
    for (int i = 0; i < dim_; ++i) n += std::llabs(c_[static_cast<std::size_t>(i)]);
    return n;
  }

  friend Vertex operator+(Vertex a, const Vertex& b) {
    for (int i = 0; i < a.dim_; ++i) a.c_[static_cast<std::size_t>(i)] += b.c_[static_cast<std::size_t>(i)];
    return a;
  }
  friend Vertex operator-(Vertex a, const Vertex& b) {
    for (int i = 0; i < a.dim_; ++i) a.c_[static_cast<std::size_t>(i)] -= b.c_[static_cast<std::size_t>(i)];
    return a;
  }
  friend Vertex operator-(Vertex a) {
    for (int i = 0; i < a.dim_; ++i) a.c_[static_cast<std::size_t>(i)] = -a.c_[static_cast<std::size_t>(i)];
    return a;
  }

  // Lexicographic on coordinates; vertices of one model share d.
  friend auto operator<=>(const Vertex& a, const Vertex& b) {
    if (auto c = a.dim_ <=> b.dim_; c != 0) return c;
    return a.c_ <=> b.c_;
  }
  friend bool operator==(const Vertex& a, const Vertex& b) = default;

  friend std::ostream& operator<<(std::ostream& os, const Vertex& v) {
    os << '(';
    for (int i = 0; i < v.dim_; ++i) os << (i ? "," : "") << v[i];
    return os << ')';
  }

 private:
  static int check_dim(int d) {
    if (d < 1 || d > max_dimension) throw error(errc::invalid_model, "dimension must be 1, 2 or 3");
    return d;
  }

  std::array<std::int64_t, 3> c_{};
  int dim_ = 1;
};

inline std::int64_t l1_distance(const Vertex& a, const Vertex& b) { return (a - b).l1_norm(); }

struct VertexHash {
  std::size_t operator()(const Vertex& v) const noexcept {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(v.dimension());
    for (int i = 0; i < v.dimension(); ++i) {
      h ^= static_cast<std::uint64_t>(v[i]) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

using VertexSet = std::unordered_set<Vertex, VertexHash>;

/// Sorted, duplicate-free list of vertices; the canonical form of a finite set.
using Region = std::vector<Vertex>;

inline Region make_region(std::vector<Vertex> vs) {
  std::sort(vs.begin(), vs.end());
  vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
  return vs;
}

inline bool region_contains(const Region& r, const Vertex& v) { return std::binary_search(r.begin(), r.end(), v); }

inline bool region_subset(const Region& a, const Region& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

/// Vertices at L1 distance exactly `radius` from `center`, in lexicographic order.
inline std::vector<Vertex> l1_sphere(const Vertex& center, std::int64_t radius) {
  const int d = center.dimension();
  std::vector<Vertex> out;
  if (radius == 0) {
    out.push_back(center);
    return out;
  }
  Vertex off(d);
  std::function<void(int, std::int64_t)> rec = [&](int axis, std::int64_t left) {
    if (axis == d - 1) {
      off[axis] = left;
      out.push_back(center + off);
      if (left != 0) {
        off[axis] = -left;
        out.push_back(center + off);
      }
      return;
    }
    for (std::int64_t x = -left; x <= left; ++x) {
      off[axis] = x;
      rec(axis + 1, left - std::llabs(x));
    }
  };
  rec(0, radius);
  std::sort(out.begin(), out.end());
  return out;
}

/// Number of points of Z^d at L1 distance exactly r.
inline double l1_sphere_size(int d, std::int64_t r) {
  if (r == 0) return 1.0;
  const auto x = static_cast<double>(r);
  switch (d) {
    case 1: return 2.0;
    case 2: return 4.0 * x;
    default: return 4.0 * x * x + 2.0;
  }
}

/// Number of points of Z^d at L1 distance at most r.
inline double l1_ball_size(int d, std::int64_t r) {
  const auto x = static_cast<double>(r);
  switch (d) {
    case 1: return 2.0 * x + 1.0;
    case 2: return 2.0 * x * x + 2.0 * x + 1.0;
    default: return (2.0 * x + 1.0) * (2.0 * x * x + 2.0 * x + 3.0) / 3.0;
  }
}

}  // namespace perfsim
