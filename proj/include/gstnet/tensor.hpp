#pragma once

#include <array>
#include <cstddef>
#include <random>
#include <vector>

namespace gstnet {

// Dense rank-5 array with layout (batch N, channel C, time T, height H, width W),
// row-major, W fastest-varying, 64-bit floats.
class Tensor5 {
 public:
  Tensor5() = default;
  Tensor5(int n, int c, int t, int h, int w);
  explicit Tensor5(const std::array<int, 5>& shape);

  static Tensor5 zeros_like(const Tensor5& other) { return Tensor5(other.shape_); }

  int n() const { return shape_[0]; }
  int c() const { return shape_[1]; }
  int t() const { return shape_[2]; }
  int h() const { return shape_[3]; }
  int w() const { return shape_[4]; }
  const std::array<int, 5>& shape() const { return shape_; }
  bool same_shape(const Tensor5& other) const { return shape_ == other.shape_; }
  bool empty() const { return data_.empty(); }
  std::size_t size() const { return data_.size(); }

  std::size_t index(int n, int c, int t, int h, int w) const {
    return ((((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + t) * shape_[3] + h) *
                shape_[4] +
            w);
  }
  double& at(int n, int c, int t, int h, int w) { return data_[index(n, c, t, h, w)]; }
  double at(int n, int c, int t, int h, int w) const { return data_[index(n, c, t, h, w)]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  void fill(double value);
  void fill_uniform(std::mt19937_64& rng, double lo, double hi);
  void fill_normal(std::mt19937_64& rng, double mean, double stddev);

 private:
  std::array<int, 5> shape_{0, 0, 0, 0, 0};
  std::vector<double> data_;
};

// splitmix64; used to derive independent per-stream seeds.
std::uint64_t mix_seed(std::uint64_t x);
std::uint64_t hash_name(const std::string& name);

}  // namespace gstnet
