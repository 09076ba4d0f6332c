#include "latefuse/rng.hpp"

#include <cmath>

namespace latefuse::rng {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += kGolden);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

std::uint64_t derive_stream(std::uint64_t base, std::uint64_t v) {
  std::uint64_t x = base ^ (v * kGolden);
  return splitmix64(x);
}

Xoshiro256::Xoshiro256(std::uint64_t seed) {
  std::uint64_t sm = seed;
  for (auto& word : s_) {
    word = splitmix64(sm);
  }
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) {
    s_[0] = kGolden;  // the all-zero state is the one invalid seed
  }
}

std::uint64_t Xoshiro256::next() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Xoshiro256::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double Xoshiro256::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double Xoshiro256::normal(double mean, double stddev) {
  const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * r * std::cos(2.0 * 3.14159265358979323846 * u2);
}

bool Xoshiro256::bernoulli(double p) { return uniform() < p; }

int Xoshiro256::poisson(double lambda) {
  if (lambda <= 0.0) {
    return 0;
  }
  const double limit = std::exp(-lambda);
  int k = 0;
  double product = 1.0;
  do {
    ++k;
    product *= uniform();
  } while (product > limit);
  return k - 1;
}

double Xoshiro256::exponential() { return -std::log(1.0 - uniform()); }

Xoshiro256 make_stream(std::uint64_t seed, std::uint64_t split,
                       std::uint64_t frame, std::uint64_t agent_tag) {
  return Xoshiro256(
      derive_stream(derive_stream(derive_stream(seed, split), frame),
                    agent_tag));
}

}  // namespace latefuse::rng
