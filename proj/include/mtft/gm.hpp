#pragma once

#include <random>

#include "mtft/types.hpp"

namespace mtft {

// Density of the positional marginal (cx, cy) of the mixture at a point.
// Throws std::domain_error on a non-positive-definite positional block.
double gm_eval(const TargetSet& set, const Vec2& point);

// Total mixture mass, i.e. the expected target count.
double gm_integral(const TargetSet& set);

// Weight truncation, moment-matched merging and hard cap on component count.
// merge_dist thresholds the Mahalanobis distance (not its square) measured in
// the candidate component's own covariance. Requires j_max >= 1.
TargetSet prune_merge(const TargetSet& set, double truncate_thresh,
                      double merge_dist, std::size_t j_max);

// max(m_prev, Poisson(m_prev)) with the Poisson drawn by inverse-CDF from a
// single canonical uniform, so the draw is reproducible from the engine state.
std::size_t jmax_draw(std::size_t m_prev, std::mt19937_64& rng);

namespace detail {
// (x >> 11) * 2^-53, uniform on [0, 1).
double canonical_uniform(std::mt19937_64& rng);
}  // namespace detail

}  // namespace mtft
