#ifndef PBES_RNG_HPP
#define PBES_RNG_HPP

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace pbes {

/// Seeded deterministic generator.
///
/// The raw stream is std::mt19937_64, whose output is fixed by the C++
/// standard. Every derived draw (uniform reals, bounded integers, normals) is
/// computed here rather than through <random> distributions, whose algorithms
/// are implementation-defined, so one seed yields one stream on every platform.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64/pbes-v1";

  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 bits of mantissa.
  double uniform();
  /// Uniform integer in [0, bound). bound must be positive.
  std::size_t uniform_index(std::size_t bound);
  /// Standard normal via the Marsaglia polar method.
  double normal();

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Seed for an independent sub-stream, e.g. (master seed, class id). The
/// result depends only on its arguments, never on call order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace pbes

#endif  // PBES_RNG_HPP
