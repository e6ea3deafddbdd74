#include "segloc/descriptors/eigen_features.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace segloc::descriptors {

std::optional<std::array<double, kEigenFeatureCount>> eigen_features(const PointCloud& points) {
  if (points.size() < 4) return std::nullopt;
  const Point3 c = geom::centroid(points);
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : points) cov += (p - c) * (p - c).transpose();
  cov /= static_cast<double>(points.size());
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov, Eigen::EigenvaluesOnly);
  Eigen::Vector3d ev = es.eigenvalues().cwiseMax(0.0);
  const double sum = ev.sum();
  if (!(sum > 1e-12)) return std::nullopt;
  ev /= sum;
  const double e1 = ev[2], e2 = ev[1], e3 = ev[0];
  auto xlogx = [](double e) { return e > 0.0 ? e * std::log(e) : 0.0; };
  return std::array<double, kEigenFeatureCount>{
      (e1 - e2) / e1,
      (e2 - e3) / e1,
      e3 / e1,
      std::cbrt(e1 * e2 * e3),
      (e1 - e3) / e1,
      -(xlogx(e1) + xlogx(e2) + xlogx(e3)),
      e3 / (e1 + e2 + e3),
  };
}

std::optional<Descriptor> describe_eigen(const segmentation::SegmentObservation& obs) {
  const auto f = eigen_features(obs.points);
  if (!f) return std::nullopt;
  Descriptor d;
  d.values.assign(f->begin(), f->end());
  d.provider = Provider::eigen;
  d.centroid = geom::centroid(obs.points);
  d.segment_id = obs.segment_id;
  d.observation_index = obs.index;
  return d;
}

}  // namespace segloc::descriptors
