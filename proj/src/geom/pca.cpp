#include "segloc/geom/pca.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace segloc::geom {

namespace {
constexpr double kDegenerateSpread = 1e-12;
}

double wrap_angle(double angle) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double a = std::fmod(angle, kTwoPi);
  if (a <= -std::numbers::pi) a += kTwoPi;
  if (a > std::numbers::pi) a -= kTwoPi;
  return a;
}

double wrap_half_turn(double angle) {
  double a = std::fmod(angle, std::numbers::pi);
  if (a <= -std::numbers::pi / 2) a += std::numbers::pi;
  if (a > std::numbers::pi / 2) a -= std::numbers::pi;
  return a;
}

Pca2dResult pca_2d(const PointCloud& points) {
  Pca2dResult result;
  if (points.size() < 2) return result;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : points) mean += p.head<2>();
  mean /= static_cast<double>(points.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : points) {
    const Eigen::Vector2d d = p.head<2>() - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(points.size());
  if (cov.trace() <= kDegenerateSpread) return result;

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(cov);
  // Eigen sorts eigenvalues ascending.
  const Eigen::Vector2d major = solver.eigenvectors().col(1);
  result.eigenvalues = {std::max(solver.eigenvalues()(1), 0.0), std::max(solver.eigenvalues()(0), 0.0)};
  result.angle = wrap_half_turn(std::atan2(major.y(), major.x()));
  result.degenerate = false;
  return result;
}

}  // namespace segloc::geom
