#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "segloc/geom/transform.hpp"
#include "segloc/localization/segment_map.hpp"

namespace segloc::localization {

struct VerifyParams {
  double epsilon = 0.4;
  std::size_t min_correspondences = 7;
  /// Search nodes allowed to the exact clique search before it settles for the
  /// best set found so far (never smaller than the greedy set).
  std::size_t node_budget = 2'000'000;
  /// Fit yaw and translation only (gravity-aligned frames).
  bool yaw_only = false;
};

struct LocalizationResult {
  std::vector<std::pair<SegmentId, SegmentId>> pairs;  // (local, global)
  geom::RigidTransform transform;                     // local frame -> map frame
  std::size_t consistency_size = 0;
  double timestamp = 0.0;
  bool exact = true;
};

/// Two candidates agree when they pair distinct local and distinct global
/// segments and their centroid distances differ by at most epsilon.
bool consistent(const Candidate& a, const Candidate& b, double epsilon);

struct CliqueResult {
  std::vector<std::size_t> members;  // indices into the input, ascending
  bool exact = true;
  std::size_t nodes = 0;
};

/// Largest pairwise-consistent subset. Candidates are put in a canonical order
/// first, so the result does not depend on input order. Only sets of at least
/// `min_size` are searched for; smaller answers may be returned empty.
CliqueResult max_consistent_set(const std::vector<Candidate>& candidates, double epsilon, std::size_t min_size = 1,
                                std::size_t node_budget = 2'000'000);

/// Highest-degree seeded greedy clique (ties by canonical order).
std::vector<std::size_t> greedy_consistent_set(const std::vector<Candidate>& candidates, double epsilon);

/// nullopt when fewer than `min_correspondences` agree or the centroids are degenerate.
/// Throws std::invalid_argument when `min_correspondences` < 3.
std::optional<LocalizationResult> geometric_verify(const std::vector<Candidate>& candidates,
                                                   const VerifyParams& params = {});

}  // namespace segloc::localization
