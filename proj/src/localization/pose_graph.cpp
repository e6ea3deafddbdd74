#include "segloc/localization/pose_graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace segloc::localization {

using geom::RigidTransform;
using geom::Vector6d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

Information loop_information() { return Information::Constant(1.0 / (0.13 * 0.13)); }

Information isotropic_information(double translation_sigma, double rotation_sigma) {
  Information w;
  w.head<3>().setConstant(1.0 / (translation_sigma * translation_sigma));
  w.tail<3>().setConstant(1.0 / (rotation_sigma * rotation_sigma));
  return w;
}

std::size_t PoseGraph::add_node(RobotId robot, const RigidTransform& pose) {
  std::size_t index = 0;
  for (const auto& n : nodes_) index += n.robot == robot;
  nodes_.push_back({robot, index, pose});
  return nodes_.size() - 1;
}

void PoseGraph::add_factor(const Factor& f) {
  if (f.from >= nodes_.size() || f.to >= nodes_.size() || f.from == f.to)
    throw std::out_of_range("pose graph: factor " + std::to_string(f.from) + "->" + std::to_string(f.to) +
                            " references an invalid node");
  factors_.push_back(f);
}

void PoseGraph::add_odometry(std::size_t from, std::size_t to, const RigidTransform& z, const Information& info) {
  add_factor({from, to, z, info, FactorKind::odometry});
}

void PoseGraph::add_loop(std::size_t from, std::size_t to, const RigidTransform& z, const Information& info) {
  add_factor({from, to, z, info, FactorKind::loop});
}

std::vector<std::size_t> PoseGraph::chain(RobotId robot) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].robot == robot) out.push_back(i);
  return out;
}

Vector6d factor_residual(const Factor& f, const RigidTransform& xi, const RigidTransform& xj) {
  return geom::se3_log(f.measurement.inverse() * (xi.inverse() * xj));
}

namespace {

double factor_cost(const Factor& f, const std::vector<RigidTransform>& x) {
  const Vector6d r = factor_residual(f, x[f.from], x[f.to]);
  return r.dot(f.information.cwiseProduct(r));
}

double cost_of(const std::vector<Factor>& factors, const std::vector<RigidTransform>& x) {
  double c = 0.0;
  for (const auto& f : factors) c += factor_cost(f, x);
  return c;
}

std::size_t find(std::vector<std::size_t>& parent, std::size_t a) {
  while (parent[a] != a) a = parent[a] = parent[parent[a]];
  return a;
}

}  // namespace

double total_cost(const PoseGraph& g) {
  std::vector<RigidTransform> x;
  for (const auto& n : g.nodes()) x.push_back(n.pose);
  return cost_of(g.factors(), x);
}

OptimizationReport optimize_pose_graph(PoseGraph& g, const OptimizerParams& params) {
  OptimizationReport report;
  const std::size_t n = g.nodes().size();
  std::vector<RigidTransform> x;
  for (const auto& node : g.nodes()) x.push_back(node.pose);

  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  for (const auto& f : g.factors()) {
    const std::size_t a = find(parent, f.from), b = find(parent, f.to);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<long> var(n, -1);
  long nvars = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (find(parent, i) == i)
      report.anchors.push_back(i);
    else
      var[i] = nvars++;
  }

  double cost = cost_of(g.factors(), x);
  report.accepted_costs.push_back(cost);
  if (nvars == 0 || g.factors().empty() || cost == 0.0) {
    report.converged = true;
    return report;
  }

  double lambda = params.initial_lambda;
  const double h = 1e-6;
  const std::size_t dim = static_cast<std::size_t>(nvars) * 6;
  while (report.iterations < params.max_iterations) {
    ++report.iterations;
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim);
    for (const auto& f : g.factors()) {
      const Vector6d r = factor_residual(f, x[f.from], x[f.to]);
      const std::size_t ends[2] = {f.from, f.to};
      Mat6 jac[2];
      for (int e = 0; e < 2; ++e) {
        for (int k = 0; k < 6; ++k) {
          Vector6d d = Vector6d::Zero();
          d[k] = h;
          RigidTransform xi = x[f.from], xj = x[f.to];
          RigidTransform& moved = e == 0 ? xi : xj;
          const RigidTransform base = moved;
          moved = base * geom::se3_exp(d);
          const Vector6d rp = factor_residual(f, xi, xj);
          moved = base * geom::se3_exp(-d);
          const Vector6d rm = factor_residual(f, xi, xj);
          jac[e].col(k) = (rp - rm) / (2.0 * h);
        }
      }
      const auto w = f.information.asDiagonal();
      for (int a = 0; a < 2; ++a) {
        if (var[ends[a]] < 0) continue;
        const long ra = var[ends[a]] * 6;
        grad.segment<6>(ra) += jac[a].transpose() * (w * r);
        for (int b = 0; b < 2; ++b) {
          if (var[ends[b]] < 0) continue;
          const long cb = var[ends[b]] * 6;
          const Mat6 block = jac[a].transpose() * w * jac[b];
          for (int p = 0; p < 6; ++p)
            for (int q = 0; q < 6; ++q) trip.emplace_back(ra + p, cb + q, block(p, q));
        }
      }
    }
    Eigen::SparseMatrix<double> hess(dim, dim);
    hess.setFromTriplets(trip.begin(), trip.end());
    const Eigen::VectorXd diag = hess.diagonal().cwiseMax(1e-9);

    bool accepted = false;
    while (!accepted && lambda < 1e12) {
      Eigen::SparseMatrix<double> damped = hess;
      for (std::size_t i = 0; i < dim; ++i) damped.coeffRef(i, i) += lambda * diag[i];
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(damped);
      if (solver.info() != Eigen::Success) {
        lambda *= 10.0;
        ++report.rejected_steps;
        continue;
      }
      const Eigen::VectorXd delta = solver.solve(-grad);
      std::vector<RigidTransform> trial = x;
      for (std::size_t i = 0; i < n; ++i)
        if (var[i] >= 0) trial[i] = x[i] * geom::se3_exp(delta.segment<6>(var[i] * 6));
      const double trial_cost = cost_of(g.factors(), trial);
      if (trial_cost < cost) {
        const double rel = (cost - trial_cost) / cost;
        x = std::move(trial);
        cost = trial_cost;
        report.accepted_costs.push_back(cost);
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (rel < params.relative_tolerance || cost == 0.0) report.converged = true;
      } else {
        lambda *= 10.0;
        ++report.rejected_steps;
      }
    }
    if (!accepted) report.converged = true;  // no descent direction left at any damping
    if (report.converged) break;
  }
  for (std::size_t i = 0; i < n; ++i) g.nodes()[i].pose = x[i];
  return report;
}

}  // namespace segloc::localization
