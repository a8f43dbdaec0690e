#include "mtft/update.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mtft {

double clutter_intensity(const UpdateConfig& cfg) {
  const double volume = cfg.area * cfg.w_span * cfg.h_span;
  if (!(volume > 0.0)) {
    throw std::invalid_argument("clutter_intensity: non-positive volume");
  }
  return cfg.clutter_rate / volume;
}

TargetSet append_births(const TargetSet& set, const MeasurementSet& z,
                        const UpdateConfig& cfg) {
  TargetSet out = set;
  for (const Vec4& box : z.boxes) {
    TargetTuple t;
    t.mean = box;
    t.cov = cfg.birth.cov;
    t.weight = cfg.birth.weight;
    t.label = -1;
    t.age = cfg.birth.age;
    t.motion = cfg.birth.motion;
    out.targets.push_back(t);
  }
  return out;
}

TargetSet kalman_update(const TargetSet& set, const MeasurementSet& z,
                        const UpdateConfig& cfg) {
  const std::size_t n = set.size();
  const std::size_t m = z.boxes.size();
  const double kappa = clutter_intensity(cfg);
  constexpr double log2pi_d = 4.0;  // d_m = 4 measurement dimensions

  std::vector<Vec4> eta(n);
  std::vector<Mat4> gain(n);
  std::vector<Mat4> cov_upd(n);
  std::vector<double> norm(n);  // (2pi)^{d/2} sqrt(det S)
  std::vector<Eigen::LLT<Mat4>> chol(n);

  for (std::size_t k = 0; k < n; ++k) {
    const TargetTuple& t = set.targets[k];
    eta[k] = cfg.H * t.mean;
    const Mat4 s = cfg.R + cfg.H * t.cov * cfg.H.transpose();
    Eigen::LLT<Mat4> llt(s);
    if (llt.info() != Eigen::Success) {
      throw std::runtime_error("kalman_update: singular innovation covariance at component " +
                               std::to_string(k));
    }
    chol[k] = llt;
    const Mat4 lmat = llt.matrixL();
    const double sqrt_det = lmat.diagonal().prod();
    if (!(sqrt_det > 0.0) || !std::isfinite(sqrt_det)) {
      throw std::runtime_error("kalman_update: singular innovation covariance at component " +
                               std::to_string(k));
    }
    norm[k] = std::pow(2.0 * std::numbers::pi, log2pi_d / 2.0) * sqrt_det;
    gain[k] = t.cov * cfg.H.transpose() * llt.solve(Mat4::Identity());
    Mat4 p = (Mat4::Identity() - gain[k] * cfg.H) * t.cov;
    cov_upd[k] = 0.5 * (p + p.transpose());
  }

  // q[k][j] = N(z_j; eta_k, S_k)
  std::vector<std::vector<double>> q(n, std::vector<double>(m));
  std::vector<double> denom(m, kappa);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      const Vec4 d = z.boxes[j] - eta[k];
      const double maha = d.dot(chol[k].solve(d));
      q[k][j] = std::exp(-0.5 * maha) / norm[k];
      denom[j] += cfg.p_d * set.targets[k].weight * q[k][j];
    }
  }

  TargetSet out;
  out.frame = z.frame;
  out.targets.reserve(n * (m + 1));
  for (std::size_t k = 0; k < n; ++k) {
    TargetTuple t = set.targets[k];
    t.weight *= 1.0 - cfg.p_d;
    out.targets.push_back(t);
  }
  for (std::size_t k = 0; k < n; ++k) {
    const TargetTuple& src = set.targets[k];
    for (std::size_t j = 0; j < m; ++j) {
      TargetTuple t = src;
      t.mean = src.mean + gain[k] * (z.boxes[j] - eta[k]);
      t.cov = cov_upd[k];
      t.weight = cfg.p_d * src.weight * q[k][j] / denom[j];
      out.targets.push_back(t);
    }
  }
  return out;
}

TargetSet select_by_weight(const TargetSet& set, double omega_t) {
  TargetSet out;
  out.frame = set.frame;
  for (const TargetTuple& t : set.targets) {
    if (t.weight >= omega_t) out.targets.push_back(t);
  }
  return out;
}

}  // namespace mtft
