#pragma once

#include <cstdint>
#include <string_view>

namespace latefuse::rng {

/// FNV-1a 64-bit hash. Used for agent-id stream tags and file content
/// digests.
std::uint64_t fnv1a64(std::string_view bytes);

/// One SplitMix64 scramble of `base ^ (v * golden)`. Chaining derive() calls
/// turns (seed, tag, tag, ...) into an independent stream seed.
std::uint64_t derive_stream(std::uint64_t base, std::uint64_t v);

/// xoshiro256** with SplitMix64 seeding. The generator is fixed and fully
/// specified here, so identical seeds reproduce identical draws on every
/// platform and toolchain.
///
/// Stream splitting convention used by the simulator:
///   stream = derive(derive(derive(scenario_seed, split), frame), agent_tag)
/// where split 0 = evaluation frames, 1 = calibration frames, 2 = scene
/// layout, and agent_tag = fnv1a64(agent_id). Every (seed, split, frame,
/// agent) tuple therefore draws from its own sub-stream.
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed);

  std::uint64_t next();

  /// Uniform double in [0, 1), 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Box-Muller; consumes exactly two uniforms per call.
  double normal(double mean, double stddev);
  bool bernoulli(double p);
  /// Knuth multiplication method; intended for small lambda.
  int poisson(double lambda);
  /// Exponential with unit rate.
  double exponential();

 private:
  std::uint64_t s_[4];
};

Xoshiro256 make_stream(std::uint64_t seed, std::uint64_t split,
                       std::uint64_t frame, std::uint64_t agent_tag);

}  // namespace latefuse::rng
