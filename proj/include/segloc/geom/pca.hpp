#pragma once

#include <array>

#include "segloc/geom/types.hpp"

namespace segloc::geom {

struct Pca2dResult {
  /// Heading of the principal x-y eigenvector, in (-pi/2, pi/2].
  double angle = 0.0;
  /// Descending.
  std::array<double, 2> eigenvalues{0.0, 0.0};
  /// True when the x-y spread vanishes; angle is 0 and callers fall back to identity.
  bool degenerate = true;
};

Pca2dResult pca_2d(const PointCloud& points);

/// Maps any angle into (-pi/2, pi/2] (an undirected axis).
double wrap_half_turn(double angle);
/// Maps any angle into (-pi, pi].
double wrap_angle(double angle);

}  // namespace segloc::geom
