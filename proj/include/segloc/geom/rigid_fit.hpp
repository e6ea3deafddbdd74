#pragma once

#include <optional>

#include "segloc/geom/transform.hpp"
#include "segloc/geom/types.hpp"

namespace segloc::geom {

/// Least-squares rigid transform T (no scale) minimising sum |T(source_i) - target_i|^2.
/// Returns std::nullopt when the pairs are collinear/coincident.
/// Throws std::invalid_argument on size mismatch or fewer than 3 pairs.
std::optional<RigidTransform> estimate_rigid_transform(const PointCloud& source, const PointCloud& target);

/// Same fit restricted to a rotation about z. nullopt when the sources have no
/// horizontal spread. Same throws as above.
std::optional<RigidTransform> estimate_yaw_transform(const PointCloud& source, const PointCloud& target);

double rms_residual(const RigidTransform& t, const PointCloud& source, const PointCloud& target);

}  // namespace segloc::geom
