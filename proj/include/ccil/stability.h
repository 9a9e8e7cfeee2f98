#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace ccil::stability {

// Context subsystem c' = A c + B e with decay constants ||A^t|| <= c sigma^t
// and input gain bound epsilon.
struct LinearSubsystem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  double sigma = 0.0;
  double c = 1.0;
  double epsilon = 0.0;

  void CheckShapes() const;
};

struct PolicyGain {
  Eigen::MatrixXd K;
};

struct IterationOptions {
  int max_iterations = 10000;
  double tolerance = 1e-12;
  int restarts = 3;
  uint64_t seed = 0x5eed;
};

// Largest |eigenvalue|. Uses normalized repeated squaring of M (the
// power sequence ||M^(2^k)||^(1/2^k)), which converges for complex and
// equal-modulus dominant eigenvalues where a single power vector oscillates.
double SpectralRadius(const Eigen::MatrixXd& m, const IterationOptions& opts = {});

// Closed-form eigenvalue moduli for n <= 3 via characteristic polynomial
// roots; used to cross-check SpectralRadius.
double SpectralRadiusSmall(const Eigen::MatrixXd& m);

// Largest singular value by power iteration on M^T M with random restarts.
double InducedNorm2(const Eigen::MatrixXd& m, const IterationOptions& opts = {});

struct NormBound {
  enum class Kind {
    kFinite,
    kUnconditional,  // epsilon == 0: context ignores the ego entirely
    kVacuous,        // c * sigma >= 1: no gain satisfies the chain
  };
  Kind kind = Kind::kFinite;
  double value = 0.0;
};

// ||K|| < c (1 - c sigma) / (epsilon (1 - sigma)).
NormBound PolicyNormBound(const LinearSubsystem& sys);

struct Certificate {
  bool bound_holds = false;
  bool a_premise = false;
  bool b_premise = false;
  bool k_premise = false;
  double rho = 0.0;
  double norm_a = 0.0;
  double norm_b = 0.0;
  double norm_k = 0.0;
  NormBound bound;
};

Certificate CertifyClosedLoop(const LinearSubsystem& sys, const PolicyGain& gain,
                              const IterationOptions& opts = {});

// K_bc = (budget / 2) I of size n: ||K_bc|| <= budget but rho(I + K_bc) > 1.
PolicyGain BcInstabilityWitness(double norm_budget, int n = 2);

// ||c_t|| for t = 0..steps under c_{t+1} = (A + B K) c_t.
std::vector<double> SimulateLinear(const LinearSubsystem& sys,
                                   const PolicyGain& gain,
                                   const Eigen::VectorXd& c0, int steps);

// ||e_t|| for t = 0..steps under e_{t+1} = (I + K_bc) e_t.
std::vector<double> SimulateBcError(const PolicyGain& gain,
                                    const Eigen::VectorXd& e0, int steps);

}  // namespace ccil::stability
