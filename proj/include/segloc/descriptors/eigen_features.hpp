#pragma once

#include <array>
#include <optional>

#include "segloc/descriptors/descriptor.hpp"

namespace segloc::descriptors {

inline constexpr int kEigenFeatureCount = 7;

/// Linearity, planarity, scattering, omnivariance, anisotropy, eigenentropy and
/// change of curvature from the covariance eigenvalues normalised to sum 1.
/// nullopt for fewer than 4 points or a vanishing covariance.
std::optional<std::array<double, kEigenFeatureCount>> eigen_features(const PointCloud& points);

/// Features for one observation wrapped as a descriptor; nullopt when degenerate.
std::optional<Descriptor> describe_eigen(const segmentation::SegmentObservation& obs);

}  // namespace segloc::descriptors
