#pragma once

#include <cstddef>
#include <vector>

#include "segloc/geom/transform.hpp"
#include "segloc/localization/segment_map.hpp"

namespace segloc::localization {

using Information = geom::Vector6d;  // diagonal weights over [translation, rotation]

/// Loop factors: 1 / (0.13 m)^2 on every tangent component.
Information loop_information();
Information isotropic_information(double translation_sigma, double rotation_sigma);

struct PoseNode {
  RobotId robot = 0;
  std::size_t index = 0;  // position in the robot's chain
  geom::RigidTransform pose;
};

enum class FactorKind { odometry, loop };

/// Measurement Z of X_from^-1 X_to.
struct Factor {
  std::size_t from = 0;
  std::size_t to = 0;
  geom::RigidTransform measurement;
  Information information = Information::Ones();
  FactorKind kind = FactorKind::odometry;
};

class PoseGraph {
 public:
  std::size_t add_node(RobotId robot, const geom::RigidTransform& pose);
  /// Throws std::out_of_range for unknown nodes.
  void add_factor(const Factor& f);
  void add_odometry(std::size_t from, std::size_t to, const geom::RigidTransform& z, const Information& info);
  void add_loop(std::size_t from, std::size_t to, const geom::RigidTransform& z,
                const Information& info = loop_information());

  const std::vector<PoseNode>& nodes() const { return nodes_; }
  std::vector<PoseNode>& nodes() { return nodes_; }
  const std::vector<Factor>& factors() const { return factors_; }
  /// Node ids of one robot in chain order.
  std::vector<std::size_t> chain(RobotId robot) const;

 private:
  std::vector<PoseNode> nodes_;
  std::vector<Factor> factors_;
};

/// log(Z^-1 X_i^-1 X_j).
geom::Vector6d factor_residual(const Factor& f, const geom::RigidTransform& xi, const geom::RigidTransform& xj);
/// Sum over factors of r^T diag(info) r.
double total_cost(const PoseGraph& g);

struct OptimizerParams {
  std::size_t max_iterations = 100;
  double relative_tolerance = 1e-9;
  double initial_lambda = 1e-4;
};

struct OptimizationReport {
  std::vector<double> accepted_costs;  // initial cost first
  std::size_t iterations = 0;
  std::size_t rejected_steps = 0;
  std::vector<std::size_t> anchors;
  bool converged = false;
};

/// Levenberg-Marquardt on the right-perturbed poses. The first node of each
/// connected component is held fixed.
OptimizationReport optimize_pose_graph(PoseGraph& g, const OptimizerParams& params = {});

}  // namespace segloc::localization
