#pragma once

#include "mtft/types.hpp"

namespace mtft {

struct MeasurementSet {
  std::vector<Vec4> boxes;  // (cx, cy, w, h)
  int frame = 0;
};

struct UpdateConfig {
  Mat4 H = Mat4::Identity();
  Mat4 R = Mat4::Identity() * 10.0;
  double p_d = 0.9;
  double clutter_rate = 2.0;  // expected clutter boxes per frame
  double area = 1.0;          // surveillance area, pixels^2
  double w_span = 1.0;        // admissible box-size spans of the
  double h_span = 1.0;        // measurement space
  double omega_t = 0.5;       // selection threshold
  BirthModel birth;
};

// Uniform clutter density over the measurement volume.
double clutter_intensity(const UpdateConfig& cfg);

// One birth component per measurement, appended after the existing ones.
TargetSet append_births(const TargetSet& set, const MeasurementSet& z,
                        const UpdateConfig& cfg);

// Measurement update: emits the missed-detection copies (input order), then
// for each component (outer) and measurement (inner) the Kalman-updated
// tuple with weight p_d*w*q / (kappa + p_d * sum_k w_k q_k). Labels, ages
// and motions are inherited. Throws on a singular innovation covariance,
// naming the component.
TargetSet kalman_update(const TargetSet& set, const MeasurementSet& z,
                        const UpdateConfig& cfg);

TargetSet select_by_weight(const TargetSet& set, double omega_t);

}  // namespace mtft
