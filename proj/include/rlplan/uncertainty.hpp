#pragma once

#include <Eigen/Dense>
#include <vector>

#include "rlplan/geometry.hpp"

namespace rlplan {

// Covariance over planar position and velocity (x, y, x_dot, y_dot).
struct StateCovariance {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();

  Eigen::Matrix2d position_block() const { return m.topLeftCorner<2, 2>(); }
};

enum class ParticipantKind { ego, other };

/// Prediction-only Kalman model: constant-velocity transition plus per-step
/// process noise for the ego vehicle (localization and tracking error) and
/// for other participants (detection and prediction error).
struct NoiseModel {
  Eigen::Matrix4d transition = Eigen::Matrix4d::Identity();
  Eigen::Matrix4d q_ego = Eigen::Matrix4d::Zero();
  Eigen::Matrix4d q_other = Eigen::Matrix4d::Zero();

  static NoiseModel constant_velocity(double step, const Eigen::Vector4d& q_ego_diag,
                                      const Eigen::Vector4d& q_other_diag);
  // Qe = diag(0.02^2, 0.02^2, 0.05^2, 0.05^2), Qo = diag(0.05^2, 0.05^2, 0.1^2, 0.1^2).
  static NoiseModel defaults(double step);

  const Eigen::Matrix4d& process_noise(ParticipantKind kind) const {
    return kind == ParticipantKind::ego ? q_ego : q_other;
  }
};

// Throws not_psd unless symmetric within 1e-12 with min eigenvalue >= -1e-10.
void require_psd(const Eigen::Ref<const Eigen::MatrixXd>& m, const char* what);

/// One prediction step F * cov * F^T + Q, without a measurement update.
StateCovariance propagate_covariance(const StateCovariance& cov, const NoiseModel& model,
                                     ParticipantKind kind);

// Covariances after 0, 1, ..., steps propagations from `initial`.
std::vector<StateCovariance> propagate_sequence(const StateCovariance& initial,
                                                const NoiseModel& model, ParticipantKind kind,
                                                std::size_t steps);

struct Ellipse {
  double a = 0.0;      // semi-major axis
  double b = 0.0;      // semi-minor axis
  double angle = 0.0;  // major-axis orientation

  bool is_point() const { return a == 0.0 && b == 0.0; }
  // Support function h(n) = max over ellipse points p of n . p (centered).
  double support(double nx, double ny) const;
};

// Quantile of the chi-square distribution with two degrees of freedom.
double chi2_quantile_2dof(double probability);

/// Ellipse holding `confidence` of a zero-mean Gaussian with covariance
/// `position_cov`.
Ellipse confidence_ellipse(const Eigen::Matrix2d& position_cov, double confidence);

struct InflatedFootprint {
  std::vector<Point2> vertices;  // convex, counter-clockwise
  OrientedRect rect;
  Ellipse ellipse;
};

/// Polygon circumscribing rect (+) ellipse. Every rectangle edge is pushed out
/// by the ellipse support in its normal direction and each rounded corner is
/// replaced by `arc_samples` extra supporting lines, so the polygon always
/// contains the exact Minkowski sum.
InflatedFootprint minkowski_inflate(const OrientedRect& rect, const Ellipse& ell,
                                    int arc_samples = 4);

// Extent of rect (+) ellipse along the rectangle's own axes.
struct InflatedExtent {
  double length = 0.0;
  double width = 0.0;
};
InflatedExtent inflated_extent(const OrientedRect& rect, const Ellipse& ell);

bool collision_with_uncertainty(const InflatedFootprint& a, const InflatedFootprint& b);

}  // namespace rlplan
