#include "pbes/sampling.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <utility>

#include "pbes/errors.hpp"

namespace pbes {

namespace {

void check_request(const DataMatrix& x, std::size_t m) {
  if (m < 1 || m > x.rows()) {
    throw ValidationError("sampler: m = " + std::to_string(m) + " must lie in [1, " +
                          std::to_string(x.rows()) + "]");
  }
}

}  // namespace

const char* to_string(SamplerMethod method) {
  switch (method) {
    case SamplerMethod::pbes: return "pbes";
    case SamplerMethod::randp: return "randp";
    case SamplerMethod::herding: return "herding";
    case SamplerMethod::random: return "random";
  }
  return "unknown";
}

SamplerMethod parse_sampler_method(const std::string& name) {
  if (name == "pbes") return SamplerMethod::pbes;
  if (name == "randp") return SamplerMethod::randp;
  if (name == "herding") return SamplerMethod::herding;
  if (name == "random") return SamplerMethod::random;
  throw ValidationError("unknown sampler method '" + name + "'");
}

std::size_t median_direction_count(std::size_t n, std::size_t m) {
  const std::size_t half = (m + 1) / 2;
  return (n % 2 == 1 && m % 2 == 0) ? half + 1 : half;
}

ExemplarSelection median_sample(const DataMatrix& x, std::size_t m,
                                const DirectionBasis& directions) {
  check_request(x, m);
  if (directions.directions.empty()) throw ValidationError("median_sample: no directions");
  if (directions.dim != x.cols()) throw ValidationError("median_sample: direction dimension mismatch");

  const std::size_t p = median_direction_count(x.rows(), m);

  // Remaining points, kept in ascending row order.
  std::vector<std::size_t> remaining(x.rows());
  std::iota(remaining.begin(), remaining.end(), 0);

  std::vector<std::size_t> appended;
  appended.reserve(m + 1);
  std::vector<std::pair<double, std::size_t>> keyed;
  for (std::size_t i = 0; i < p && !remaining.empty(); ++i) {
    const auto proj = project(x, directions.directions[i % directions.directions.size()]);
    keyed.clear();
    for (std::size_t idx : remaining) keyed.emplace_back(proj[idx], idx);
    std::sort(keyed.begin(), keyed.end());

    const std::size_t size = keyed.size();
    if (size % 2 == 0) {
      appended.push_back(keyed[size / 2 - 1].second);
      appended.push_back(keyed[size / 2].second);
    } else {
      appended.push_back(keyed[(size - 1) / 2].second);
    }
    const std::size_t taken = size % 2 == 0 ? 2 : 1;
    for (std::size_t t = 0; t < taken; ++t) {
      const std::size_t idx = appended[appended.size() - 1 - t];
      remaining.erase(std::lower_bound(remaining.begin(), remaining.end(), idx));
    }
  }

  ExemplarSelection out;
  out.method = directions.source == DirectionSource::random ? SamplerMethod::randp : SamplerMethod::pbes;
  out.appended_count = appended.size();
  out.direction_source = directions.source;
  out.ordered_indices.assign(appended.begin(), appended.begin() + static_cast<std::ptrdiff_t>(m));
  return out;
}

ExemplarSelection pbes_sample(const DataMatrix& x, std::size_t m) {
  check_request(x, m);
  return median_sample(x, m, principal_directions(x, median_direction_count(x.rows(), m)));
}

ExemplarSelection randp_sample(const DataMatrix& x, std::size_t m, std::size_t pool, Rng& rng) {
  check_request(x, m);
  const std::size_t p = median_direction_count(x.rows(), m);
  auto sel = median_sample(x, m, random_unit_directions(x.cols(), pool == 0 ? p : pool, rng));
  sel.method = SamplerMethod::randp;
  return sel;
}

ExemplarSelection herding_sample(const DataMatrix& x, std::size_t m) {
  check_request(x, m);
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const auto mu = mean_vector(x);

  std::vector<char> used(n, 0);
  std::vector<double> running(d, 0.0);
  ExemplarSelection out;
  out.method = SamplerMethod::herding;
  for (std::size_t k = 1; k <= m; ++k) {
    const double inv_k = 1.0 / static_cast<double>(k);
    std::size_t best = n;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (used[i]) continue;
      const auto r = x.row(i);
      double dist = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = mu[j] - (r[j] + running[j]) * inv_k;
        dist += diff * diff;
      }
      if (dist < best_dist) {
        best_dist = dist;
        best = i;
      }
    }
    used[best] = 1;
    const auto r = x.row(best);
    for (std::size_t j = 0; j < d; ++j) running[j] += r[j];
    out.ordered_indices.push_back(best);
  }
  out.appended_count = m;
  return out;
}

ExemplarSelection random_sample(const DataMatrix& x, std::size_t m, Rng& rng) {
  check_request(x, m);
  const std::size_t n = x.rows();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + rng.uniform_index(n - i);
    std::swap(perm[i], perm[j]);
  }
  ExemplarSelection out;
  out.method = SamplerMethod::random;
  out.ordered_indices.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(m));
  out.appended_count = m;
  return out;
}

ExemplarSelection sample(const SamplerSpec& spec, const DataMatrix& x, std::size_t m, Rng& rng) {
  switch (spec.method) {
    case SamplerMethod::pbes: return pbes_sample(x, m);
    case SamplerMethod::randp: return randp_sample(x, m, spec.randp_pool, rng);
    case SamplerMethod::herding: return herding_sample(x, m);
    case SamplerMethod::random: return random_sample(x, m, rng);
  }
  throw ValidationError("sample: unknown method");
}

}  // namespace pbes
