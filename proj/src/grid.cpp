#include "mtft/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mtft/association.hpp"

namespace mtft {

int GridSpec::rows() const {
  return static_cast<int>(std::ceil(extent_y / ts));
}

int GridSpec::cols() const {
  return static_cast<int>(std::ceil(extent_x / ts));
}

void GridSpec::validate() const {
  if (!(ts > 0.0)) throw std::invalid_argument("GridSpec: ts must be positive");
  if (rows() < 4 || cols() < 4) {
    throw std::invalid_argument("GridSpec: need at least 4x4 cells");
  }
}

PhdMap render_phd(const TargetSet& set, const GridSpec& grid) {
  grid.validate();
  PhdMap map;
  map.grid = grid;
  map.values = Grid::Zero(grid.rows(), grid.cols());

  for (const TargetTuple& t : set.targets) {
    const Mat2 sp = t.cov.topLeftCorner<2, 2>();
    const double det = sp.determinant();
    if (!(det > 0.0)) {
      throw std::domain_error("render_phd: degenerate positional covariance");
    }
    const Mat2 inv = sp.inverse();
    const double amp = t.weight / (2.0 * std::numbers::pi * std::sqrt(det));
    const double radius = 5.0 * std::sqrt(std::max(sp(0, 0), sp(1, 1)));

    const double cx = t.mean[0], cy = t.mean[1];
    const int j0 = std::max(0, static_cast<int>((cx - radius - grid.origin_x) / grid.ts));
    const int j1 = std::min(grid.cols() - 1,
                            static_cast<int>((cx + radius - grid.origin_x) / grid.ts));
    const int i0 = std::max(0, static_cast<int>((cy - radius - grid.origin_y) / grid.ts));
    const int i1 = std::min(grid.rows() - 1,
                            static_cast<int>((cy + radius - grid.origin_y) / grid.ts));
    for (int i = i0; i <= i1; ++i) {
      for (int j = j0; j <= j1; ++j) {
        const Vec2 d(grid.cell_x(j) - cx, grid.cell_y(i) - cy);
        map.values(i, j) += amp * std::exp(-0.5 * d.dot(inv * d));
      }
    }
  }
  return map;
}

PddMap pdd(const PhdMap& current, const PhdMap& previous) {
  if (!(current.grid == previous.grid)) {
    throw std::invalid_argument("pdd: grid mismatch");
  }
  PddMap d;
  d.grid = current.grid;
  d.values = current.values - previous.values;
  return d;
}

PhdMap postprocess_prediction(const Grid& raw, const GridSpec& grid,
                              const PhdMap& prev_phd, int border) {
  grid.validate();
  if (!(prev_phd.grid == grid)) {
    throw std::invalid_argument("postprocess_prediction: grid mismatch");
  }
  if (raw.rows() != grid.rows() || raw.cols() != grid.cols()) {
    throw std::invalid_argument("postprocess_prediction: raw shape mismatch");
  }
  const int r = grid.rows(), c = grid.cols();
  if (border < 0 || 2 * border >= std::min(r, c)) {
    throw std::invalid_argument("postprocess_prediction: border leaves no interior");
  }

  PhdMap out;
  out.grid = grid;
  out.values = raw + prev_phd.values;

  if (border > 0) {
    std::vector<double> interior;
    interior.reserve(static_cast<std::size_t>(r - 2 * border) * (c - 2 * border));
    for (int i = border; i < r - border; ++i) {
      for (int j = border; j < c - border; ++j) {
        interior.push_back(out.values(i, j));
      }
    }
    const auto mid = interior.begin() + interior.size() / 2;
    std::nth_element(interior.begin(), mid, interior.end());
    double median = *mid;
    if (interior.size() % 2 == 0) {
      const double hi = median;
      std::nth_element(interior.begin(), mid - 1, interior.end());
      median = 0.5 * (*(mid - 1) + hi);
    }
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < c; ++j) {
        if (i < border || i >= r - border || j < border || j >= c - border) {
          out.values(i, j) = median;
        }
      }
    }
  }

  out.values = out.values.max(0.0);

  const double mass = prev_phd.integral();
  const double cur = out.values.sum() * grid.ts * grid.ts;
  if (mass > 1e-12) {
    if (cur <= 0.0) {
      throw std::runtime_error("postprocess_prediction: degenerate prediction");
    }
    out.values *= mass / cur;
  } else {
    out.values.setZero();
  }
  return out;
}

PeakList extract_peaks(const PhdMap& map, std::size_t count,
                       double min_separation) {
  const int r = static_cast<int>(map.values.rows());
  const int c = static_cast<int>(map.values.cols());
  PeakList out;
  if (count == 0) return out;

  // Local maximum: >= all 8 neighbours and strictly > the earlier (row-major)
  // ones, so a flat plateau yields exactly one candidate.
  struct Cand {
    int i, j;
    double v;
  };
  std::vector<Cand> cands;
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) {
      const double v = map.values(i, j);
      if (v <= 0.0) continue;
      bool ok = true;
      for (int di = -1; di <= 1 && ok; ++di) {
        for (int dj = -1; dj <= 1 && ok; ++dj) {
          if (di == 0 && dj == 0) continue;
          const int ni = i + di, nj = j + dj;
          if (ni < 0 || ni >= r || nj < 0 || nj >= c) continue;
          const double nv = map.values(ni, nj);
          const bool earlier = di < 0 || (di == 0 && dj < 0);
          if (earlier ? (nv >= v) : (nv > v)) ok = false;
        }
      }
      if (ok) cands.push_back({i, j, v});
    }
  }
  std::stable_sort(cands.begin(), cands.end(),
                   [](const Cand& a, const Cand& b) { return a.v > b.v; });

  const int win = std::max(1, static_cast<int>(std::lround(min_separation / map.grid.ts)));
  for (const Cand& cd : cands) {
    if (out.peaks.size() >= count) break;
    const Vec2 p(map.grid.cell_x(cd.j), map.grid.cell_y(cd.i));
    bool clear = true;
    for (const Peak& acc : out.peaks) {
      if ((acc.pos - p).norm() < min_separation) {
        clear = false;
        break;
      }
    }
    if (!clear) continue;

    // 3x3 centroid refinement on clamped nonnegative values.
    double wsum = 0.0, xs = 0.0, ys = 0.0;
    for (int di = -1; di <= 1; ++di) {
      for (int dj = -1; dj <= 1; ++dj) {
        const int ni = cd.i + di, nj = cd.j + dj;
        if (ni < 0 || ni >= r || nj < 0 || nj >= c) continue;
        const double w = std::max(map.values(ni, nj), 0.0);
        wsum += w;
        xs += w * map.grid.cell_x(nj);
        ys += w * map.grid.cell_y(ni);
      }
    }
    Peak pk;
    pk.pos = wsum > 0.0 ? Vec2(xs / wsum, ys / wsum) : p;
    pk.value = cd.v;
    double mass = 0.0;
    for (int di = -win; di <= win; ++di) {
      for (int dj = -win; dj <= win; ++dj) {
        const int ni = cd.i + di, nj = cd.j + dj;
        if (ni < 0 || ni >= r || nj < 0 || nj >= c) continue;
        mass += std::max(map.values(ni, nj), 0.0);
      }
    }
    pk.mass = mass * map.grid.ts * map.grid.ts;
    out.peaks.push_back(pk);
  }
  out.underfull = out.peaks.size() < count;
  return out;
}

TargetSet assign_covariances(const PeakList& peaks, const TargetSet& prev,
                             const BirthModel& birth, double birth_box_w,
                             double birth_box_h) {
  const std::size_t np = peaks.peaks.size();
  Eigen::MatrixXd cost(np, prev.size());
  for (std::size_t i = 0; i < np; ++i) {
    for (std::size_t j = 0; j < prev.size(); ++j) {
      cost(i, j) = (peaks.peaks[i].pos - prev.targets[j].mean.head<2>()).norm();
    }
  }
  const Assignment match = hungarian(cost, false);

  TargetSet out;
  out.frame = prev.frame;
  for (std::size_t i = 0; i < np; ++i) {
    const Peak& pk = peaks.peaks[i];
    TargetTuple t;
    const int j = np ? match.row_to_col[i] : -1;
    if (j >= 0) {
      const TargetTuple& src = prev.targets[j];
      t.mean << pk.pos[0], pk.pos[1], src.mean[2], src.mean[3];
      t.cov = src.cov;
      t.label = src.label;
      t.age = src.age;
      t.motion = src.motion;
    } else {
      t.mean << pk.pos[0], pk.pos[1], birth_box_w, birth_box_h;
      t.cov = birth.cov;
      t.label = -1;
      t.age = birth.age;
      t.motion = birth.motion;
    }
    const double det = t.cov.topLeftCorner<2, 2>().determinant();
    t.weight = det > 0.0 ? pk.value * 2.0 * std::numbers::pi * std::sqrt(det)
                         : pk.mass;
    out.targets.push_back(t);
  }
  return out;
}

}  // namespace mtft
