#include "mtft/gm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mtft {

double gm_eval(const TargetSet& set, const Vec2& point) {
  double acc = 0.0;
  for (const TargetTuple& t : set.targets) {
    const Mat2 sp = t.cov.topLeftCorner<2, 2>();
    const double det = sp.determinant();
    if (!(det > 0.0) || !sp.allFinite()) {
      throw std::domain_error("gm_eval: degenerate positional covariance");
    }
    const Vec2 d = point - t.mean.head<2>();
    const double q = d.dot(sp.inverse() * d);
    acc += t.weight * std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(det));
  }
  return acc;
}

double gm_integral(const TargetSet& set) {
  double acc = 0.0;
  for (const TargetTuple& t : set.targets) acc += t.weight;
  return acc;
}

TargetSet prune_merge(const TargetSet& set, double truncate_thresh,
                      double merge_dist, std::size_t j_max) {
  if (j_max < 1) throw std::invalid_argument("prune_merge: j_max must be >= 1");

  std::vector<const TargetTuple*> live;
  live.reserve(set.size());
  for (const TargetTuple& t : set.targets) {
    if (t.weight >= truncate_thresh) live.push_back(&t);
  }

  TargetSet out;
  out.frame = set.frame;
  std::vector<bool> used(live.size(), false);
  const double d2_max = merge_dist * merge_dist;

  for (;;) {
    int pivot = -1;
    double best = -1.0;
    for (std::size_t i = 0; i < live.size(); ++i) {
      if (!used[i] && live[i]->weight > best) {
        best = live[i]->weight;
        pivot = static_cast<int>(i);
      }
    }
    if (pivot < 0) break;

    const Vec4 mp = live[pivot]->mean;
    std::vector<std::size_t> cluster;
    for (std::size_t i = 0; i < live.size(); ++i) {
      if (used[i]) continue;
      const Vec4 d = live[i]->mean - mp;
      const double q = d.dot(live[i]->cov.llt().solve(d));
      if (q <= d2_max) cluster.push_back(i);
    }

    double w = 0.0;
    Vec4 m = Vec4::Zero();
    for (std::size_t i : cluster) {
      used[i] = true;
      w += live[i]->weight;
      m += live[i]->weight * live[i]->mean;
    }
    m /= w;
    Mat4 c = Mat4::Zero();
    for (std::size_t i : cluster) {
      const Vec4 d = m - live[i]->mean;
      c += live[i]->weight * (live[i]->cov + d * d.transpose());
    }
    c /= w;

    TargetTuple merged = *live[pivot];  // metadata follows the dominant member
    merged.mean = m;
    merged.cov = c;
    merged.weight = w;
    out.targets.push_back(merged);
  }

  if (out.targets.size() > j_max) {
    std::stable_sort(out.targets.begin(), out.targets.end(),
                     [](const TargetTuple& a, const TargetTuple& b) {
                       return a.weight > b.weight;
                     });
    out.targets.resize(j_max);
  }
  return out;
}

namespace detail {
double canonical_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}
}  // namespace detail

std::size_t jmax_draw(std::size_t m_prev, std::mt19937_64& rng) {
  const double lambda = static_cast<double>(m_prev);
  const double u = detail::canonical_uniform(rng);
  // Inverse CDF by direct summation; fine at tracking-scale lambda.
  std::size_t k = 0;
  double p = std::exp(-lambda);
  double cdf = p;
  const std::size_t cap =
      m_prev + 20 + static_cast<std::size_t>(10.0 * std::sqrt(lambda));
  while (u > cdf && k < cap) {
    ++k;
    p *= lambda / static_cast<double>(k);
    cdf += p;
  }
  return std::max(m_prev, k);
}

}  // namespace mtft
