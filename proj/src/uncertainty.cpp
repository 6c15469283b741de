#include "rlplan/uncertainty.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "rlplan/error.hpp"

namespace rlplan {

NoiseModel NoiseModel::constant_velocity(double step, const Eigen::Vector4d& q_ego_diag,
                                         const Eigen::Vector4d& q_other_diag) {
  NoiseModel model;
  model.transition(0, 2) = step;
  model.transition(1, 3) = step;
  model.q_ego = q_ego_diag.asDiagonal();
  model.q_other = q_other_diag.asDiagonal();
  require_psd(model.q_ego, "ego process noise");
  require_psd(model.q_other, "participant process noise");
  return model;
}

NoiseModel NoiseModel::defaults(double step) {
  return constant_velocity(step, Eigen::Vector4d(0.02 * 0.02, 0.02 * 0.02, 0.05 * 0.05, 0.05 * 0.05),
                           Eigen::Vector4d(0.05 * 0.05, 0.05 * 0.05, 0.1 * 0.1, 0.1 * 0.1));
}

void require_psd(const Eigen::Ref<const Eigen::MatrixXd>& m, const char* what) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::not_psd, std::string(what) + " is not square");
  if (!m.allFinite()) throw Error(ErrorCode::not_psd, std::string(what) + " has non-finite entries");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(ErrorCode::not_psd, std::string(what) + " is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-10) {
    throw Error(ErrorCode::not_psd, std::string(what) + " has a negative eigenvalue");
  }
}

StateCovariance propagate_covariance(const StateCovariance& cov, const NoiseModel& model,
                                     ParticipantKind kind) {
  require_psd(cov.m, "covariance");
  const Eigen::Matrix4d& f = model.transition;
  StateCovariance out;
  out.m = f * cov.m * f.transpose() + model.process_noise(kind);
  out.m = 0.5 * (out.m + out.m.transpose()).eval();
  return out;
}

std::vector<StateCovariance> propagate_sequence(const StateCovariance& initial,
                                                const NoiseModel& model, ParticipantKind kind,
                                                std::size_t steps) {
  std::vector<StateCovariance> seq;
  seq.reserve(steps + 1);
  seq.push_back(initial);
  for (std::size_t i = 0; i < steps; ++i) seq.push_back(propagate_covariance(seq.back(), model, kind));
  return seq;
}

double Ellipse::support(double nx, double ny) const {
  const double c = std::cos(angle), s = std::sin(angle);
  const double along = nx * c + ny * s;
  const double across = -nx * s + ny * c;
  return std::sqrt(a * a * along * along + b * b * across * across);
}

double chi2_quantile_2dof(double probability) {
  if (!(probability > 0.0 && probability < 1.0)) {
    throw Error(ErrorCode::invalid_confidence, "confidence must lie in (0, 1)");
  }
  // The 2-dof chi-square CDF is 1 - exp(-x / 2).
  return -2.0 * std::log1p(-probability);
}

Ellipse confidence_ellipse(const Eigen::Matrix2d& position_cov, double confidence) {
  const double q = chi2_quantile_2dof(confidence);
  require_psd(position_cov, "position covariance");
  const double sxx = position_cov(0, 0), syy = position_cov(1, 1), sxy = position_cov(0, 1);
  const double mean = 0.5 * (sxx + syy);
  const double radius = std::hypot(0.5 * (sxx - syy), sxy);
  const double major = std::max(mean + radius, 0.0);
  const double minor = std::max(mean - radius, 0.0);
  Ellipse e;
  e.a = std::sqrt(q * major);
  e.b = std::sqrt(q * minor);
  e.angle = radius > 0.0 ? 0.5 * std::atan2(2.0 * sxy, sxx - syy) : 0.0;
  return e;
}

InflatedFootprint minkowski_inflate(const OrientedRect& rect, const Ellipse& ell, int arc_samples) {
  InflatedFootprint fp;
  fp.rect = rect;
  fp.ellipse = ell;
  if (ell.is_point()) {
    const auto c = corners(rect);
    fp.vertices.assign(c.begin(), c.end());
    return fp;
  }

  const int per_quadrant = std::max(arc_samples, 0) + 1;
  const int count = 4 * per_quadrant;
  const double uc = std::cos(rect.heading), us = std::sin(rect.heading);
  const double hl = 0.5 * rect.length, hw = 0.5 * rect.width;

  // Supporting lines n . x = h(n), directions sweeping counter-clockwise from
  // the rear-right edge normal. Every quarter turn lands on an edge normal.
  std::vector<double> nx(count), ny(count), h(count);
  for (int j = 0; j < count; ++j) {
    const double phi = rect.heading - 0.5 * std::numbers::pi +
                       0.5 * std::numbers::pi * static_cast<double>(j) / per_quadrant;
    nx[j] = std::cos(phi);
    ny[j] = std::sin(phi);
    const double along = nx[j] * uc + ny[j] * us;
    const double across = -nx[j] * us + ny[j] * uc;
    h[j] = nx[j] * rect.cx + ny[j] * rect.cy + hl * std::abs(along) + hw * std::abs(across) +
           ell.support(nx[j], ny[j]);
  }
  fp.vertices.reserve(count);
  for (int j = 0; j < count; ++j) {
    const int k = (j + 1) % count;
    const double det = nx[j] * ny[k] - ny[j] * nx[k];
    fp.vertices.push_back({(h[j] * ny[k] - h[k] * ny[j]) / det, (nx[j] * h[k] - nx[k] * h[j]) / det});
  }
  return fp;
}

InflatedExtent inflated_extent(const OrientedRect& rect, const Ellipse& ell) {
  const double uc = std::cos(rect.heading), us = std::sin(rect.heading);
  return {rect.length + 2.0 * ell.support(uc, us), rect.width + 2.0 * ell.support(-us, uc)};
}

bool collision_with_uncertainty(const InflatedFootprint& a, const InflatedFootprint& b) {
  return convex_polygons_intersect(a.vertices, b.vertices);
}

}  // namespace rlplan
