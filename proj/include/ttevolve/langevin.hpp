#pragma once

#include <cstdint>
#include <functional>

#include "ttevolve/basis.hpp"
#include "ttevolve/sketch.hpp"
#include "ttevolve/tt.hpp"

namespace ttv {

struct Potential {
  enum class Kind { DoubleWell, GinzburgLandau, Custom };
  Kind kind = Kind::DoubleWell;
  int d = 0;
  double coeff = 0.3;    // double-well quadratic coefficient on modes >= 1
  double lambda = 0.03;  // Ginzburg-Landau interface strength
  std::function<double(const Eigen::RowVectorXd&)> custom_value;
  std::function<Eigen::RowVectorXd(const Eigen::RowVectorXd&)> custom_grad;

  double value(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  Eigen::RowVectorXd grad(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  bool separable() const { return kind == Kind::DoubleWell; }
  // 1D slice V_k(x) for separable potentials
  double mode_potential(int mode, double x) const;
};

Potential double_well(int d, double coeff = 0.3);
Potential ginzburg_landau(int d, double lambda = 0.03);
Potential custom_potential(int d, std::function<double(const Eigen::RowVectorXd&)> value,
                           std::function<Eigen::RowVectorXd(const Eigen::RowVectorXd&)> grad);

struct LangevinConfig {
  double beta = 1.0;
  double dt = 0.02;        // outer step per re-estimation cycle
  int substeps = 1;        // inner Euler-Maruyama steps per cycle
  double halfwidth = 2.5;  // domain [-M, M]^d
  long long particles = 10000;
};

// in-place Euler-Maruyama with reflecting walls at +-M; streams keyed by
// (seed, iter, particle)
void em_advance(Eigen::MatrixXd& pts, const Potential& pot, const LangevinConfig& cfg,
                std::uint64_t seed, std::uint64_t iter, int nthreads = 1);

struct SampleDiagnostics {
  double clamped_fraction = 0;  // negative conditional mass clipped while sampling
};

// ancestral sampling from a continuous train of basis coefficients; each 1D
// conditional is evaluated on a fine grid, clipped at zero, and inverted as
// a piecewise-linear density
Eigen::MatrixXd sample_continuous_tt(const TensorTrain<double>& density,
                                     const UnivariateBasis& basis, long long N,
                                     std::uint64_t seed, std::uint64_t iter,
                                     SampleDiagnostics* diag = nullptr, int nthreads = 1);

// scale so the full integral is one
TensorTrain<double> l1_normalize(const TensorTrain<double>& density, const UnivariateBasis& basis);

// rank-1 train of per-mode coefficient vectors, L1-normalized
TensorTrain<double> product_density(const std::vector<Eigen::VectorXd>& node_pdfs,
                                    const UnivariateBasis& basis);
// best-effort projection of the flat density onto the basis
TensorTrain<double> uniform_density(int d, const UnivariateBasis& basis);

struct FpeStepResult {
  TensorTrain<double> density;
  SampleDiagnostics diag;
  TrimReport trim;
};

// one outer cycle: sample the current density, advance the particles,
// re-estimate by cluster sketching, L1-normalize. Aborts when more than 20%
// of conditional mass had to be clamped.
FpeStepResult fpe_step(const TensorTrain<double>& density, const Potential& pot,
                       const LangevinConfig& cfg, const UnivariateBasis& basis,
                       const SketchFamily& sketch, double svd_threshold, std::uint64_t seed,
                       std::uint64_t iter, int nthreads = 1);

// 1D marginal of the train evaluated at the basis quadrature nodes
Eigen::VectorXd tt_marginal_on_grid(const TensorTrain<double>& density,
                                    const UnivariateBasis& basis, int mode);

// relative L2 error between a marginal and a reference, both on the
// quadrature grid
double marginal_error(const TensorTrain<double>& density, const Eigen::VectorXd& reference,
                      const UnivariateBasis& basis, int mode);

// exact Boltzmann marginal on the quadrature grid (separable potentials)
Eigen::VectorXd equilibrium_marginal(const Potential& pot, double beta,
                                     const UnivariateBasis& basis, int mode);

// long-run Monte Carlo estimate of one equilibrium marginal: evolve a
// uniform cloud to t_total, histogram the final snapshot, interpolate onto
// the quadrature grid
Eigen::VectorXd mc_equilibrium_marginal(const Potential& pot, const LangevinConfig& cfg,
                                        const UnivariateBasis& basis, int mode, long long N,
                                        double t_total, std::uint64_t seed, int nthreads = 1,
                                        int bins = 100);

}  // namespace ttv
