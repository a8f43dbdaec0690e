#include "mtft/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "mtft/association.hpp"

namespace mtft {

OspaResult ospa(const std::vector<Vec2>& a, const std::vector<Vec2>& b,
                const OspaConfig& cfg) {
  const std::size_t alpha = a.size(), beta = b.size();
  OspaResult r;
  if (alpha == 0 && beta == 0) return r;
  const std::size_t n = std::max(alpha, beta);
  const std::vector<Vec2>& small = alpha <= beta ? a : b;
  const std::vector<Vec2>& large = alpha <= beta ? b : a;

  double cost = 0.0;
  if (!small.empty()) {
    Eigen::MatrixXd d(small.size(), large.size());
    for (std::size_t i = 0; i < small.size(); ++i) {
      for (std::size_t j = 0; j < large.size(); ++j) {
        d(i, j) = std::pow(std::min((small[i] - large[j]).norm(), cfg.c), cfg.p);
      }
    }
    cost = hungarian(d, false).total_cost;
  }

  const double card_term = std::pow(cfg.c, cfg.p) * static_cast<double>(n - small.size());
  r.overall = std::pow((card_term + cost) / static_cast<double>(n), 1.0 / cfg.p);
  r.card = std::pow(card_term / static_cast<double>(n), 1.0 / cfg.p);
  r.loc = r.overall - r.card;
  return r;
}

namespace {

void check_unique(const LabelledBoxes& boxes, const char* side) {
  std::set<std::int64_t> seen;
  for (const auto& [label, box] : boxes) {
    if (!seen.insert(label).second) {
      throw std::invalid_argument(std::string("clear_mot: duplicate label in ") + side);
    }
  }
}

}  // namespace

MotScores clear_mot(const Timeline& tracks, const Timeline& gt,
                    double iou_thresh) {
  MotScores s;
  std::map<std::int64_t, std::int64_t> last_match;  // gt label -> track label

  std::set<int> frames;
  for (const auto& [f, _] : tracks) frames.insert(f);
  for (const auto& [f, _] : gt) frames.insert(f);

  static const LabelledBoxes kEmpty;
  for (int f : frames) {
    const auto ti = tracks.find(f);
    const auto gi = gt.find(f);
    const LabelledBoxes& tb = ti == tracks.end() ? kEmpty : ti->second;
    const LabelledBoxes& gb = gi == gt.end() ? kEmpty : gi->second;
    check_unique(tb, "tracks");
    check_unique(gb, "ground truth");
    s.gt_total += static_cast<long>(gb.size());

    std::vector<bool> g_used(gb.size(), false), t_used(tb.size(), false);

    // Persist previous correspondences while they still overlap.
    for (std::size_t i = 0; i < gb.size(); ++i) {
      const auto it = last_match.find(gb[i].first);
      if (it == last_match.end()) continue;
      for (std::size_t j = 0; j < tb.size(); ++j) {
        if (t_used[j] || tb[j].first != it->second) continue;
        if (iou(gb[i].second, tb[j].second) >= iou_thresh) {
          g_used[i] = true;
          t_used[j] = true;
          ++s.tp;
        }
        break;
      }
    }

    std::vector<std::size_t> gfree, tfree;
    for (std::size_t i = 0; i < gb.size(); ++i) {
      if (!g_used[i]) gfree.push_back(i);
    }
    for (std::size_t j = 0; j < tb.size(); ++j) {
      if (!t_used[j]) tfree.push_back(j);
    }
    if (!gfree.empty() && !tfree.empty()) {
      Eigen::MatrixXd cost(gfree.size(), tfree.size());
      for (std::size_t gi2 = 0; gi2 < gfree.size(); ++gi2) {
        for (std::size_t tj = 0; tj < tfree.size(); ++tj) {
          const double v = iou(gb[gfree[gi2]].second, tb[tfree[tj]].second);
          cost(gi2, tj) = v >= iou_thresh ? -v : 0.0;
        }
      }
      const Assignment m = hungarian(cost, true);
      for (std::size_t gi2 = 0; gi2 < gfree.size(); ++gi2) {
        const int tj = m.row_to_col[gi2];
        if (tj < 0) continue;
        const std::int64_t glab = gb[gfree[gi2]].first;
        const std::int64_t tlab = tb[tfree[tj]].first;
        const auto it = last_match.find(glab);
        if (it != last_match.end() && it->second != tlab) ++s.id_switches;
        last_match[glab] = tlab;
        g_used[gfree[gi2]] = true;
        t_used[tfree[tj]] = true;
        ++s.tp;
      }
    }

    for (std::size_t i = 0; i < gb.size(); ++i) {
      if (!g_used[i]) ++s.fn;
    }
    for (std::size_t j = 0; j < tb.size(); ++j) {
      if (!t_used[j]) ++s.fp;
    }
  }

  const double denom = s.gt_total > 0 ? static_cast<double>(s.gt_total) : 1.0;
  s.mota = 1.0 - static_cast<double>(s.fn + s.fp + s.id_switches) / denom;
  const double lsw = s.id_switches > 0 ? std::log10(static_cast<double>(s.id_switches)) : 0.0;
  s.motal = 1.0 - (static_cast<double>(s.fn + s.fp) + lsw) / denom;
  s.recall = s.gt_total > 0 ? static_cast<double>(s.tp) / denom : 0.0;
  const long det = s.tp + s.fp;
  s.precision = det > 0 ? static_cast<double>(s.tp) / static_cast<double>(det) : 0.0;
  return s;
}

}  // namespace mtft
