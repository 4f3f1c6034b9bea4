#pragma once

#include <cstdint>
#include <span>

namespace wlm::app {

double mean(std::span<const double> xs);

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double sample_stddev(std::span<const double> xs);

struct PermutationTest {
  double p_value = 1.0;
  double observed = 0.0;  // mean(a) - mean(b)
  bool exact = true;      // every relabelling enumerated
  std::uint64_t permutations = 0;
};

/// Two-sided permutation test on the difference of means. All C(n_a+n_b, n_a)
/// relabellings are enumerated when there are at most `exact_limit`;
/// otherwise `samples` random relabellings drawn from `seed` are used.
PermutationTest permutation_test(std::span<const double> a, std::span<const double> b,
                                 std::uint64_t exact_limit = 1'000'000, std::uint64_t samples = 100'000,
                                 std::uint64_t seed = 1);

}  // namespace wlm::app
