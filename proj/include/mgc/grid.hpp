#pragma once

#include "mgc/core.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace mgc {

// Uniform grid on the box [-R, R]^n.
class Grid {
 public:
  Grid() = default;
  Grid(int n, double R, double h) : n_(n), R_(R), h_(h) {
    require(n >= 1 && n <= 3, ErrorKind::InvalidInput, "grid dimension must be 1..3");
    require(R > 0.0 && h > 0.0, ErrorKind::InvalidInput, "grid needs R > 0 and h > 0");
    const double cells = 2.0 * R / h;
    m_ = static_cast<int>(std::llround(cells));
    require(std::abs(cells - m_) <= 1e-9 * std::max(1.0, cells), ErrorKind::InvalidInput,
            "h must divide 2R");
    require(m_ + 1 >= 9, ErrorKind::InvalidInput, "need at least 9 nodes per axis");
    size_ = 1;
    for (int d = 0; d < n_; ++d) {
      stride_[d] = size_;
      size_ *= (m_ + 1);
    }
  }

  int dim() const { return n_; }
  double R() const { return R_; }
  double h() const { return h_; }
  int nodes_per_axis() const { return m_ + 1; }
  std::size_t size() const { return size_; }
  std::size_t stride(int d) const { return stride_[d]; }

  int coord_index(std::size_t idx, int d) const { return static_cast<int>((idx / stride_[d]) % (m_ + 1)); }
  double coord(std::size_t idx, int d) const { return -R_ + h_ * coord_index(idx, d); }
  Vec point(std::size_t idx) const {
    Vec x(n_);
    for (int d = 0; d < n_; ++d) x[d] = coord(idx, d);
    return x;
  }
  std::size_t index(const std::array<int, 3>& ijk) const {
    std::size_t idx = 0;
    for (int d = 0; d < n_; ++d) idx += stride_[d] * ijk[d];
    return idx;
  }
  // distance to the box boundary counted in nodes
  int layer(std::size_t idx) const {
    int l = m_;
    for (int d = 0; d < n_; ++d) {
      const int i = coord_index(idx, d);
      l = std::min({l, i, m_ - i});
    }
    return l;
  }
  bool is_boundary(std::size_t idx) const { return layer(idx) == 0; }

  std::vector<std::size_t> interior() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < size_; ++i)
      if (!is_boundary(i)) out.push_back(i);
    return out;
  }
  std::vector<std::size_t> boundary() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < size_; ++i)
      if (is_boundary(i)) out.push_back(i);
    return out;
  }

  bool operator==(const Grid& o) const { return n_ == o.n_ && m_ == o.m_ && R_ == o.R_ && h_ == o.h_; }

 private:
  int n_ = 0, m_ = 0;
  double R_ = 0.0, h_ = 0.0;
  std::size_t size_ = 0;
  std::array<std::size_t, 3> stride_{};
};

class GridFunction {
 public:
  GridFunction() = default;
  explicit GridFunction(Grid g, double fill = 0.0) : grid_(std::move(g)), v_(grid_.size(), fill) {}
  GridFunction(Grid g, std::vector<double> v) : grid_(std::move(g)), v_(std::move(v)) {
    require(v_.size() == grid_.size(), ErrorKind::InvalidInput, "value count does not match the grid");
  }

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return v_.size(); }
  double& operator[](std::size_t i) { return v_[i]; }
  double operator[](std::size_t i) const { return v_[i]; }
  std::vector<double>& values() { return v_; }
  const std::vector<double>& values() const { return v_; }

  // Copy boundary nodes from other (same grid).
  void set_boundary_from(const GridFunction& other) {
    require(other.grid_ == grid_, ErrorKind::InvalidInput, "grids differ");
    for (std::size_t i = 0; i < v_.size(); ++i)
      if (grid_.is_boundary(i)) v_[i] = other.v_[i];
  }

  void write_csv(std::ostream& os) const {
    os.precision(17);
    static const char* names[] = {"x", "y", "z"};
    for (int d = 0; d < grid_.dim(); ++d) os << names[d] << ",";
    os << "u\n";
    for (std::size_t i = 0; i < v_.size(); ++i) {
      for (int d = 0; d < grid_.dim(); ++d) os << grid_.coord(i, d) << ",";
      os << v_[i] << "\n";
    }
  }

  // header: int32 n, float64 h, float64 R, int32 nodes per axis (x n); then values, x fastest.
  // Everything little-endian.
  void write_binary(std::ostream& os) const {
    put<std::int32_t>(os, grid_.dim());
    put<double>(os, grid_.h());
    put<double>(os, grid_.R());
    for (int d = 0; d < grid_.dim(); ++d) put<std::int32_t>(os, grid_.nodes_per_axis());
    for (double x : v_) put<double>(os, x);
    require(static_cast<bool>(os), ErrorKind::Io, "failed writing grid file");
  }

  static GridFunction read_binary(std::istream& is) {
    const int n = get<std::int32_t>(is);
    const double h = get<double>(is);
    const double R = get<double>(is);
    require(static_cast<bool>(is) && n >= 1 && n <= 3, ErrorKind::Io, "bad grid header");
    Grid g(n, R, h);
    for (int d = 0; d < n; ++d)
      require(get<std::int32_t>(is) == g.nodes_per_axis(), ErrorKind::Io, "grid header counts disagree");
    GridFunction u(g);
    for (double& x : u.v_) x = get<double>(is);
    require(static_cast<bool>(is), ErrorKind::Io, "truncated grid file");
    return u;
  }

  void save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    require(static_cast<bool>(os), ErrorKind::Io, "cannot open " + path);
    write_binary(os);
  }
  static GridFunction load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(static_cast<bool>(is), ErrorKind::Io, "cannot open " + path);
    return read_binary(is);
  }

 private:
  template <class T>
  static void put(std::ostream& os, T x) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &x, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    os.write(reinterpret_cast<const char*>(b), sizeof(T));
  }
  template <class T>
  static T get(std::istream& is) {
    unsigned char b[sizeof(T)] = {};
    is.read(reinterpret_cast<char*>(b), sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    T x;
    std::memcpy(&x, b, sizeof(T));
    return x;
  }

  Grid grid_;
  std::vector<double> v_;
};

template <class Fn>
GridFunction sample(const Grid& g, Fn&& fn) {
  GridFunction u(g);
  for (std::size_t i = 0; i < g.size(); ++i) u[i] = fn(g.point(i));
  return u;
}

// Multilinear interpolation; x must lie in the box.
inline double interpolate(const GridFunction& u, const Vec& x) {
  const Grid& g = u.grid();
  const int n = g.dim(), m = g.nodes_per_axis() - 1;
  require(x.size() == n, ErrorKind::InvalidInput, "point dimension differs from the grid");
  std::array<int, 3> base{};
  std::array<double, 3> frac{};
  for (int d = 0; d < n; ++d) {
    const double s = (x[d] + g.R()) / g.h();
    require(s >= -1e-9 && s <= m + 1e-9, ErrorKind::InvalidInput, "point outside the grid box");
    base[d] = std::clamp(static_cast<int>(std::floor(s)), 0, m - 1);
    frac[d] = std::clamp(s - base[d], 0.0, 1.0);
  }
  double acc = 0.0;
  for (int corner = 0; corner < (1 << n); ++corner) {
    double w = 1.0;
    std::array<int, 3> ijk{};
    for (int d = 0; d < n; ++d) {
      const int bit = (corner >> d) & 1;
      ijk[d] = base[d] + bit;
      w *= bit ? frac[d] : 1.0 - frac[d];
    }
    if (w != 0.0) acc += w * u[g.index(ijk)];
  }
  return acc;
}

inline double sup_distance(const GridFunction& a, const GridFunction& b) {
  require(a.grid() == b.grid(), ErrorKind::InvalidInput, "grids differ");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace mgc
