#pragma once

#include <cstddef>
#include <vector>

#include "vamh/bounds.hpp"
#include "vamh/random.hpp"

namespace vamh::testing {

/// Strictly positive target and proposal tables on the given supports.
/// State-dependent proposals get one random row per full state.
DiscreteInstance random_instance(RandomStream& rng, const std::vector<std::size_t>& supports,
                                 bool state_independent);

/// d in {2, 3}, each support in {2, 3}.
DiscreteInstance random_instance(RandomStream& rng, bool state_independent);

/// pi = [.1, .2, .3, .4] on {0,1} x {0,1}, p1 = [.5, .5], p2 = [.3, .7].
DiscreteInstance two_by_two_instance();

/// Strictly positive probability vector of length n.
std::vector<double> random_simplex(RandomStream& rng, std::size_t n, double floor = 0.05);

}  // namespace vamh::testing
