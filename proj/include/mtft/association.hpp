#pragma once

#include <cstdint>

#include "mtft/types.hpp"

namespace mtft {

struct AssocConfig {
  int a_t = 5;       // maturity threshold
  int a_birth = 5;   // initial age of new tracks
  int a_at = 2;      // decay divisor
  int a_am = 1;      // per-survival increment
  bool forbid_nonnegative = true;  // zero-overlap pairs stay unmatched
  bool coast_decaying = true;      // advance unmatched tracks by their motion
};

struct Assignment {
  std::vector<int> row_to_col;  // -1 where unmatched
  std::vector<int> col_to_row;
  double total_cost = 0.0;      // sum of matched entries of the input matrix
};

// Minimum-total-cost one-to-one assignment on a rectangular matrix.
// With forbid_nonnegative, entries >= 0 are unassignable.
Assignment hungarian(const Eigen::MatrixXd& cost, bool forbid_nonnegative = false);

// Intersection-over-union of (cx, cy, w, h) boxes; degenerate boxes give 0.
double iou(const Vec4& a, const Vec4& b);

// delta(i, j) = -age_i * IoU(prev_i, curr_j), rows = prev, cols = curr.
Eigen::MatrixXd distance_matrix(const TargetSet& prev, const TargetSet& curr);

// Survival: age + a_am. Decay: age - floor(age / a_at). Never negative.
int age_update(int age, bool survived, const AssocConfig& cfg);

// Algorithm: match prev against selected on the age-weighted IoU matrix;
// matched -> survivor (label kept, age incremented, motion re-estimated),
// unmatched selected -> birth (fresh label), unmatched prev -> decaying.
// Output order: survivors, births, decaying. Throws on duplicate prev labels.
TargetSet t2t_associate(const TargetSet& prev, const TargetSet& selected,
                        const AssocConfig& cfg, std::int64_t& label_counter);

TargetSet extract_mature(const TargetSet& set, int a_t);

}  // namespace mtft
