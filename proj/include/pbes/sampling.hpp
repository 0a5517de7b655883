#ifndef PBES_SAMPLING_HPP
#define PBES_SAMPLING_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "pbes/numerics.hpp"
#include "pbes/rng.hpp"

namespace pbes {

enum class SamplerMethod { pbes, randp, herding, random };

const char* to_string(SamplerMethod method);
/// Throws ValidationError for unknown names.
SamplerMethod parse_sampler_method(const std::string& name);

/// Ordered exemplar choice. Prefixes are meaningful: the first k entries are
/// the sampler's answer for any smaller budget k.
struct ExemplarSelection {
  SamplerMethod method = SamplerMethod::pbes;
  std::vector<std::size_t> ordered_indices;
  /// Points appended before truncation to m (pbes/randp); m for the others.
  std::size_t appended_count = 0;
  /// Direction provenance for median samplers.
  std::optional<DirectionSource> direction_source;
};

/// Direction count used by the median samplers for n points and m exemplars:
/// ceil(m/2), plus one when n is odd and m is even.
std::size_t median_direction_count(std::size_t n, std::size_t m);

/// Median sampling along the given directions (cycled if fewer than needed).
/// Exposed so pbes and randp share one loop.
ExemplarSelection median_sample(const DataMatrix& x, std::size_t m,
                                const DirectionBasis& directions);

/// Median sampling along principal directions of x.
ExemplarSelection pbes_sample(const DataMatrix& x, std::size_t m);

/// Median sampling along random directions. `pool` is the number of random
/// directions drawn; 0 means one per iteration.
ExemplarSelection randp_sample(const DataMatrix& x, std::size_t m, std::size_t pool, Rng& rng);

/// Greedy herding without replacement: each step keeps the running exemplar
/// mean closest to the class mean.
ExemplarSelection herding_sample(const DataMatrix& x, std::size_t m);

/// Fisher-Yates prefix of length m.
ExemplarSelection random_sample(const DataMatrix& x, std::size_t m, Rng& rng);

struct SamplerSpec {
  SamplerMethod method = SamplerMethod::pbes;
  std::size_t randp_pool = 0;
};

/// Dispatch on spec.method. rng is only consumed by randp and random.
ExemplarSelection sample(const SamplerSpec& spec, const DataMatrix& x, std::size_t m, Rng& rng);

}  // namespace pbes

#endif  // PBES_SAMPLING_HPP
