#include "ccil/stability.h"

#include <cmath>
#include <complex>
#include <stdexcept>

#include "ccil/rng.h"

namespace ccil::stability {

void LinearSubsystem::CheckShapes() const {
  if (A.rows() != A.cols()) throw std::invalid_argument("A must be square");
  if (B.rows() != A.rows()) {
    throw std::invalid_argument("B must have as many rows as A");
  }
}

double SpectralRadius(const Eigen::MatrixXd& m, const IterationOptions& opts) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("SpectralRadius: matrix must be square");
  }
  if (m.size() == 0) return 0.0;
  Eigen::MatrixXd p = m;
  double scale = p.norm();
  if (scale == 0.0 || !std::isfinite(scale)) return scale == 0.0 ? 0.0 : scale;
  p /= scale;
  // log rho = sum_k log(s_k) / 2^k + log||P_k|| / 2^k.
  double log_acc = std::log(scale);
  double weight = 1.0;
  double estimate = log_acc;
  const int max_squarings = std::min(opts.max_iterations, 100);
  int settled = 0;
  for (int k = 1; k <= max_squarings; ++k) {
    p = p * p;
    const double s = p.norm();
    weight *= 0.5;
    if (s == 0.0) return 0.0;  // nilpotent
    p /= s;
    log_acc += weight * std::log(s);
    const double change = std::abs(log_acc - estimate);
    estimate = log_acc;
    settled = change <= opts.tolerance * std::max(1.0, std::abs(estimate))
                  ? settled + 1
                  : 0;
    if (settled >= 2) break;
  }
  return std::exp(estimate);
}

double SpectralRadiusSmall(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() > 3 || m.rows() == 0) {
    throw std::invalid_argument("SpectralRadiusSmall: need square n <= 3");
  }
  using C = std::complex<double>;
  const int n = static_cast<int>(m.rows());
  if (n == 1) return std::abs(m(0, 0));
  if (n == 2) {
    const double tr = m.trace();
    const double det = m.determinant();
    const C disc = std::sqrt(C(tr * tr - 4.0 * det, 0.0));
    return std::max(std::abs((tr + disc) / 2.0), std::abs((tr - disc) / 2.0));
  }
  // x^3 + a x^2 + b x + c with a = -tr, b = sum of principal 2x2 minors,
  // c = -det; roots by Cardano.
  const double a = -m.trace();
  const double b = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0) + m(0, 0) * m(2, 2) -
                   m(0, 2) * m(2, 0) + m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
  const double c = -m.determinant();
  const double p = b - a * a / 3.0;
  const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
  const C disc = std::sqrt(C(q * q / 4.0 + p * p * p / 27.0, 0.0));
  C u = std::pow(C(-q / 2.0, 0.0) + disc, 1.0 / 3.0);
  if (std::abs(u) < 1e-300) u = std::pow(C(-q / 2.0, 0.0) - disc, 1.0 / 3.0);
  const C omega(-0.5, std::sqrt(3.0) / 2.0);
  double best = 0.0;
  for (int k = 0; k < 3; ++k) {
    const C uk = u * std::pow(omega, k);
    const C root = std::abs(uk) < 1e-300 ? C(0.0, 0.0) : uk - p / (3.0 * uk);
    best = std::max(best, std::abs(root - a / 3.0));
  }
  return best;
}

double InducedNorm2(const Eigen::MatrixXd& m, const IterationOptions& opts) {
  if (m.size() == 0) return 0.0;
  const Eigen::MatrixXd gram = m.transpose() * m;
  Rng rng(opts.seed);
  double best = 0.0;
  for (int r = 0; r < std::max(1, opts.restarts); ++r) {
    Rng stream = rng.Split(static_cast<uint64_t>(r));
    Eigen::VectorXd x(gram.rows());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = stream.Normal();
    double xn = x.norm();
    if (xn == 0.0) continue;
    x /= xn;
    double lambda = 0.0;
    for (int it = 0; it < opts.max_iterations; ++it) {
      Eigen::VectorXd y = gram * x;
      const double next = x.dot(y);
      const double yn = y.norm();
      if (yn == 0.0) {
        lambda = 0.0;
        break;
      }
      x = y / yn;
      const bool done =
          std::abs(next - lambda) <= opts.tolerance * std::max(next, 1e-300);
      lambda = next;
      if (done) break;
    }
    best = std::max(best, lambda);
  }
  return std::sqrt(std::max(best, 0.0));
}

NormBound PolicyNormBound(const LinearSubsystem& sys) {
  if (sys.c * sys.sigma >= 1.0 || sys.sigma >= 1.0) {
    return {NormBound::Kind::kVacuous, 0.0};
  }
  if (sys.epsilon == 0.0) return {NormBound::Kind::kUnconditional, 0.0};
  return {NormBound::Kind::kFinite,
          sys.c * (1.0 - sys.c * sys.sigma) / (sys.epsilon * (1.0 - sys.sigma))};
}

Certificate CertifyClosedLoop(const LinearSubsystem& sys, const PolicyGain& gain,
                              const IterationOptions& opts) {
  sys.CheckShapes();
  if (gain.K.rows() != sys.B.cols() || gain.K.cols() != sys.A.rows()) {
    throw std::invalid_argument("K must be m x n for B n x m and A n x n");
  }
  Certificate cert;
  cert.bound = PolicyNormBound(sys);
  cert.norm_a = InducedNorm2(sys.A, opts);
  cert.norm_b = InducedNorm2(sys.B, opts);
  cert.norm_k = InducedNorm2(gain.K, opts);
  cert.a_premise = cert.norm_a <= sys.c * sys.sigma;
  if (sys.c > 0.0) {
    cert.b_premise = cert.norm_b <= sys.epsilon * (1.0 - sys.sigma) / sys.c;
  }
  switch (cert.bound.kind) {
    case NormBound::Kind::kFinite:
      cert.k_premise = cert.norm_k < cert.bound.value;
      break;
    case NormBound::Kind::kUnconditional:
      cert.k_premise = true;
      break;
    case NormBound::Kind::kVacuous:
      cert.k_premise = false;
      break;
  }
  cert.bound_holds = cert.a_premise && cert.b_premise && cert.k_premise;
  cert.rho = SpectralRadius(sys.A + sys.B * gain.K, opts);
  return cert;
}

PolicyGain BcInstabilityWitness(double norm_budget, int n) {
  if (!(norm_budget > 0.0)) {
    throw std::invalid_argument("norm budget must be > 0");
  }
  return {Eigen::MatrixXd::Identity(n, n) * (0.5 * norm_budget)};
}

std::vector<double> SimulateLinear(const LinearSubsystem& sys,
                                   const PolicyGain& gain,
                                   const Eigen::VectorXd& c0, int steps) {
  if (steps < 1) throw std::invalid_argument("SimulateLinear: steps >= 1");
  sys.CheckShapes();
  const Eigen::MatrixXd closed = sys.A + sys.B * gain.K;
  std::vector<double> norms{c0.norm()};
  Eigen::VectorXd c = c0;
  for (int t = 0; t < steps; ++t) {
    c = closed * c;
    norms.push_back(c.norm());
  }
  return norms;
}

std::vector<double> SimulateBcError(const PolicyGain& gain,
                                    const Eigen::VectorXd& e0, int steps) {
  const Eigen::MatrixXd closed =
      Eigen::MatrixXd::Identity(gain.K.rows(), gain.K.cols()) + gain.K;
  std::vector<double> norms{e0.norm()};
  Eigen::VectorXd e = e0;
  for (int t = 0; t < steps; ++t) {
    e = closed * e;
    norms.push_back(e.norm());
  }
  return norms;
}

}  // namespace ccil::stability
