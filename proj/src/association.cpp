#include "mtft/association.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <stdexcept>

namespace mtft {

namespace {
constexpr double kForbidden = 1e9;
}

Assignment hungarian(const Eigen::MatrixXd& cost, bool forbid_nonnegative) {
  const int rows = static_cast<int>(cost.rows());
  const int cols = static_cast<int>(cost.cols());
  Assignment out;
  out.row_to_col.assign(rows, -1);
  out.col_to_row.assign(cols, -1);
  if (rows == 0 || cols == 0) return out;

  // Square the matrix with zero-cost dummies; forbidden entries get a large
  // finite penalty so real pairs are preferred and can be stripped afterwards.
  const int n = std::max(rows, cols);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double v = cost(r, c);
      a(r, c) = (forbid_nonnegative && v >= 0.0) ? kForbidden : v;
    }
  }

  // Kuhn-Munkres with row/column potentials, 1-indexed; p[j] holds the row
  // assigned to column j, column 0 is virtual.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  for (int j = 1; j <= n; ++j) {
    const int r = p[j] - 1;
    const int c = j - 1;
    if (r >= rows || c >= cols) continue;  // dummy side
    if (forbid_nonnegative && cost(r, c) >= 0.0) continue;
    out.row_to_col[r] = c;
    out.col_to_row[c] = r;
    out.total_cost += cost(r, c);
  }
  return out;
}

double iou(const Vec4& a, const Vec4& b) {
  if (a[2] <= 0.0 || a[3] <= 0.0 || b[2] <= 0.0 || b[3] <= 0.0) return 0.0;
  const double ax0 = a[0] - a[2] / 2.0, ax1 = a[0] + a[2] / 2.0;
  const double ay0 = a[1] - a[3] / 2.0, ay1 = a[1] + a[3] / 2.0;
  const double bx0 = b[0] - b[2] / 2.0, bx1 = b[0] + b[2] / 2.0;
  const double by0 = b[1] - b[3] / 2.0, by1 = b[1] + b[3] / 2.0;
  const double iw = std::min(ax1, bx1) - std::max(ax0, bx0);
  const double ih = std::min(ay1, by1) - std::max(ay0, by0);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a[2] * a[3] + b[2] * b[3] - inter);
}

Eigen::MatrixXd distance_matrix(const TargetSet& prev, const TargetSet& curr) {
  Eigen::MatrixXd d(prev.size(), curr.size());
  for (std::size_t i = 0; i < prev.size(); ++i) {
    for (std::size_t j = 0; j < curr.size(); ++j) {
      d(i, j) = -static_cast<double>(prev.targets[i].age) *
                iou(prev.targets[i].mean, curr.targets[j].mean);
    }
  }
  return d;
}

int age_update(int age, bool survived, const AssocConfig& cfg) {
  const int next = survived ? age + cfg.a_am : age - age / cfg.a_at;
  return std::max(next, 0);
}

TargetSet t2t_associate(const TargetSet& prev, const TargetSet& selected,
                        const AssocConfig& cfg, std::int64_t& label_counter) {
  std::set<std::int64_t> seen;
  for (const TargetTuple& t : prev.targets) {
    if (!seen.insert(t.label).second) {
      throw std::invalid_argument("t2t_associate: duplicate label in carried set");
    }
  }

  const Eigen::MatrixXd delta = distance_matrix(prev, selected);
  const Assignment match = hungarian(delta, cfg.forbid_nonnegative);

  TargetSet out;
  out.frame = selected.frame;

  for (std::size_t j = 0; j < selected.size(); ++j) {
    const int i = match.col_to_row[j];
    if (i < 0) continue;
    TargetTuple t = selected.targets[j];
    const TargetTuple& src = prev.targets[i];
    t.label = src.label;
    t.age = age_update(src.age, true, cfg);
    t.motion = t.mean.head<2>() - src.mean.head<2>();
    out.targets.push_back(t);
  }
  for (std::size_t j = 0; j < selected.size(); ++j) {
    if (match.col_to_row[j] >= 0) continue;
    TargetTuple t = selected.targets[j];
    t.label = label_counter++;
    t.age = cfg.a_birth;
    t.motion = Vec2::Zero();
    out.targets.push_back(t);
  }
  for (std::size_t i = 0; i < prev.size(); ++i) {
    if (match.row_to_col[i] >= 0) continue;
    TargetTuple t = prev.targets[i];
    t.age = age_update(t.age, false, cfg);
    if (cfg.coast_decaying) t.mean.head<2>() += t.motion;
    out.targets.push_back(t);
  }
  return out;
}

TargetSet extract_mature(const TargetSet& set, int a_t) {
  TargetSet out;
  out.frame = set.frame;
  for (const TargetTuple& t : set.targets) {
    if (t.age >= a_t) out.targets.push_back(t);
  }
  return out;
}

}  // namespace mtft
