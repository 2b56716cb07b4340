#include "gstnet/tensor.hpp"

#include <stdexcept>
#include <string>

namespace gstnet {

namespace {
std::size_t checked_volume(const std::array<int, 5>& shape) {
  std::size_t volume = 1;
  for (int d : shape) {
    if (d < 1) {
      throw std::invalid_argument("Tensor5: every dimension must be >= 1, got " +
                                  std::to_string(d));
    }
    volume *= static_cast<std::size_t>(d);
  }
  return volume;
}
}  // namespace

Tensor5::Tensor5(int n, int c, int t, int h, int w) : Tensor5(std::array<int, 5>{n, c, t, h, w}) {}

Tensor5::Tensor5(const std::array<int, 5>& shape) : shape_(shape), data_(checked_volume(shape), 0.0) {}

void Tensor5::fill(double value) {
  for (double& x : data_) x = value;
}

void Tensor5::fill_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (double& x : data_) x = dist(rng);
}

void Tensor5::fill_normal(std::mt19937_64& rng, double mean, double stddev) {
  std::normal_distribution<double> dist(mean, stddev);
  for (double& x : data_) x = dist(rng);
}

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_name(const std::string& name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char ch : name) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace gstnet
