#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. None of them call into the library code they check.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "ccil/geometry.h"
#include "ccil/learner/layers.h"
#include "ccil/lqr.h"
#include "ccil/rng.h"

namespace ccil::oracle {

// Box membership by projection onto the box axes.
inline bool InBox(const OrientedBox& b, double px, double py, double grow = 0.0) {
  const double c = std::cos(b.center.heading);
  const double s = std::sin(b.center.heading);
  const double dx = px - b.center.x;
  const double dy = py - b.center.y;
  const double u = c * dx + s * dy;
  const double v = -s * dx + c * dy;
  return std::abs(u) <= 0.5 * b.length + grow && std::abs(v) <= 0.5 * b.width + grow;
}

// Rasterizes the overlap of two boxes on a 1 cm grid (boxes grown or shrunk
// by `grow` on every side). True as soon as one grid point lies in both.
inline bool SampledOverlap(const OrientedBox& a, const OrientedBox& b, double grow,
                           double cell = 0.01) {
  auto bounds = [&](const OrientedBox& o) {
    const double r = 0.5 * std::hypot(o.length, o.width) + std::abs(grow);
    return std::array<double, 4>{o.center.x - r, o.center.y - r, o.center.x + r,
                                 o.center.y + r};
  };
  const auto ba = bounds(a);
  const auto bb = bounds(b);
  const double x0 = std::max(ba[0], bb[0]);
  const double y0 = std::max(ba[1], bb[1]);
  const double x1 = std::min(ba[2], bb[2]);
  const double y1 = std::min(ba[3], bb[3]);
  if (x0 > x1 || y0 > y1) return false;
  const double gx = std::floor(x0 / cell) * cell;
  const double gy = std::floor(y0 / cell) * cell;
  for (double x = gx; x <= x1; x += cell) {
    for (double y = gy; y <= y1; y += cell) {
      if (InBox(a, x, y, grow) && InBox(b, x, y, grow)) return true;
    }
  }
  return false;
}

// All-pairs shortest paths over a dense weight matrix (inf = no edge).
inline std::vector<std::vector<double>> FloydWarshall(std::vector<std::vector<double>> d) {
  const size_t n = d.size();
  for (size_t i = 0; i < n; ++i) d[i][i] = std::min(d[i][i], 0.0);
  for (size_t k = 0; k < n; ++k) {
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < n; ++j) {
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
      }
    }
  }
  return d;
}

// Dense least-squares solution of the tracking problem: every state is an
// affine function of the stacked inputs, so J(U) = |M U - r|^2 and the
// optimum solves the normal equations.
struct DenseLqrSolution {
  Eigen::VectorXd inputs;  // 3T
  double cost = 0.0;
};

inline DenseLqrSolution DenseLqr(const lqr::LqrProblem& p) {
  const int T = p.horizon();
  const double dt = p.dt;
  // Scalar triple integrator per channel; channels decouple.
  Eigen::Matrix3d F;
  F << 1, dt, dt * dt, 0, 1, dt, 0, 0, 1;
  const Eigen::Vector3d G(dt * dt * dt, dt * dt, dt);
  // Unwrapped heading targets.
  std::vector<Eigen::Vector3d> targets;
  double prev = p.initial.pose.z();
  for (const auto& t : p.targets) {
    double h = t.heading;
    while (h - prev > M_PI) h -= 2 * M_PI;
    while (h - prev <= -M_PI) h += 2 * M_PI;
    prev = h;
    targets.emplace_back(t.x, t.y, h);
  }
  const auto& w = p.weights;
  DenseLqrSolution sol;
  sol.inputs = Eigen::VectorXd::Zero(3 * T);
  for (int ch = 0; ch < 3; ++ch) {
    const bool heading = ch == 2;
    const double w_vel = heading ? w.angular_velocity : 0.0;
    const double w_acc = heading ? w.angular_acceleration : w.acceleration;
    // Angular jerk carries no weight.
    const double w_in = heading ? 0.0 : w.jerk;
    // Rows: position error, sqrt-weighted velocity, acceleration and input.
    const int rows = 4 * T;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(rows, T);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(rows);
    Eigen::Vector3d x0(p.initial.pose(ch), p.initial.velocity(ch),
                       p.initial.acceleration(ch));
    Eigen::Matrix3d Fpow = Eigen::Matrix3d::Identity();
    for (int t = 1; t <= T; ++t) {
      Fpow = F * Fpow;
      const Eigen::Vector3d free = Fpow * x0;
      // Effect of input k on state t: F^(t-1-k) G.
      Eigen::Matrix3d Fk = Eigen::Matrix3d::Identity();
      std::vector<Eigen::Vector3d> effect(t);
      for (int k = t - 1; k >= 0; --k) {
        effect[k] = Fk * G;
        Fk = F * Fk;
      }
      const int base = 4 * (t - 1);
      for (int k = 0; k < t; ++k) {
        M(base, k) = effect[k](0);
        M(base + 1, k) = std::sqrt(w_vel) * effect[k](1);
        M(base + 2, k) = std::sqrt(w_acc) * effect[k](2);
      }
      r(base) = targets[t - 1](ch) - free(0);
      r(base + 1) = -std::sqrt(w_vel) * free(1);
      r(base + 2) = -std::sqrt(w_acc) * free(2);
      M(base + 3, t - 1) = std::sqrt(w_in);
    }
    const Eigen::MatrixXd A = M.transpose() * M;
    const Eigen::VectorXd b = M.transpose() * r;
    const Eigen::VectorXd u = A.ldlt().solve(b);
    sol.cost += (M * u - r).squaredNorm();
    for (int t = 0; t < T; ++t) sol.inputs(3 * t + ch) = u(t);
  }
  return sol;
}

// Central finite-difference check of d(loss)/d(leaf) for every leaf entry.
// Returns the largest |analytic - numeric| / max(1, |analytic|, |numeric|).
inline double GradientError(const std::vector<nn::Var>& leaves,
                            const std::function<nn::Var()>& loss, double h = 1e-6) {
  for (const auto& l : leaves) l->grad = nn::Tensor();
  nn::Backward(loss());
  std::vector<nn::Tensor> analytic;
  for (const auto& l : leaves) {
    analytic.push_back(l->grad.empty() ? nn::Tensor(l->value.shape()) : l->grad);
  }
  double worst = 0.0;
  for (size_t li = 0; li < leaves.size(); ++li) {
    auto& v = leaves[li]->value;
    for (size_t i = 0; i < v.size(); ++i) {
      const double keep = v[i];
      v[i] = keep + h;
      const double up = loss()->value[0];
      v[i] = keep - h;
      const double down = loss()->value[0];
      v[i] = keep;
      const double numeric = (up - down) / (2 * h);
      const double a = analytic[li][i];
      const double scale = std::max({1.0, std::abs(a), std::abs(numeric)});
      worst = std::max(worst, std::abs(a - numeric) / scale);
    }
  }
  return worst;
}

inline nn::Tensor RandomTensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
  nn::Tensor t(std::move(shape));
  for (size_t i = 0; i < t.size(); ++i) t[i] = rng.Uniform(-scale, scale);
  return t;
}

inline Eigen::MatrixXd RandomMatrix(int rows, int cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.Normal();
  }
  return m;
}

// Largest singular value and eigenvalue modulus straight from Eigen's
// decompositions.
inline double EigenNorm2(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

inline double EigenSpectralRadius(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(m);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace ccil::oracle
