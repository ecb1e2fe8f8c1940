#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ttevolve/common.hpp"
#include "ttevolve/mpo.hpp"
#include "ttevolve/sketch.hpp"
#include "ttevolve/tt.hpp"

namespace ttv {

// H = -sum_{i,j} J_ij Sz_i Sz_j - h sum_i Sx_i with Pauli Sz, Sx. J is
// symmetric with zero diagonal and 1/2 per ordered neighbor pair, so each
// lattice edge contributes unit coupling; this reproduces the quoted
// reference energies (e.g. 1D cycle, d=16, h=1 -> -20.4046).
struct IsingModel {
  int nsites = 0;
  double field = 1.0;
  Eigen::MatrixXd J;
  std::vector<std::pair<int, int>> edges;  // unordered pairs in TT mode order

  double edge_coupling(int i, int j) const { return 2.0 * J(i, j); }
};

IsingModel ising_chain(int d, double h, bool periodic = true);
// rows x cols square lattice mapped to the chain by boustrophedon order
IsingModel ising_lattice(int rows, int cols, double h, bool periodic = true);
std::vector<int> serpentine_order(int rows, int cols);

// Gaussian decoupling of the two-body propagator: exp(dt sum J_ij Sz_i Sz_j)
// has quadratic-coefficient matrix Jt = -J, shifted by c so Jt + cI is PSD
// (the constant exp(-dt c d) is left to normalization). site_weight maps a
// standard normal field vector to per-site rotation angles.
struct HsDecomposition {
  Eigen::MatrixXd U;
  Eigen::VectorXd lambda;  // eigenvalues of Jt + cI, clipped at 0
  double shift = 0;
  double dt = 0;
  Eigen::MatrixXd site_weight;  // (d x d): angles = site_weight * k

  int nfields() const { return static_cast<int>(lambda.size()); }
};

HsDecomposition build_hs(const IsingModel& model, double dt, double eps = 1e-9);

// per-site angles for one sampled field vector
Eigen::VectorXd sample_field_rotation(const HsDecomposition& hs, RngStream& rng);
// diag(exp(i angle), exp(-i angle)) per site, rank 1
MatrixProductOperator<cplx> propagator_mpo(const Eigen::VectorXd& angles);

// exact one-body factor exp(dt h sum Sx); site matrix cosh(dt h) I + sinh(dt h) Sx
Mat<cplx> onebody_site(const IsingModel& model, double dt);
TensorTrain<cplx> apply_onebody(const IsingModel& model, double dt, const TensorTrain<cplx>& tt);

// N sampled two-body propagators acting on a shared base state, as
// per-particle diagonal scalings; streams keyed by (seed, iter, particle)
ScaledTTEnsemble<cplx> propagate_ensemble(const TensorTrain<cplx>& base,
                                          const HsDecomposition& hs, long long N,
                                          std::uint64_t seed, std::uint64_t iter,
                                          int nthreads = 1);

// one power-method iteration: one-body factor, sampled two-body ensemble,
// sketched re-estimation, L2 normalization. strang applies half one-body
// steps on both sides instead.
TensorTrain<cplx> afqmc_step(const TensorTrain<cplx>& state, const IsingModel& model,
                             const HsDecomposition& hs, long long N, const SketchFamily& sketch,
                             double svd_threshold, std::uint64_t seed, std::uint64_t iter,
                             TrimReport* report = nullptr, int nthreads = 1,
                             bool strang = false);

// baseline re-estimation: particle mean by repeated tt_add, rank capped by
// rounding whenever it exceeds max_rank
TensorTrain<cplx> afqmc_step_round(const TensorTrain<cplx>& state, const IsingModel& model,
                                   const HsDecomposition& hs, long long N, int max_rank,
                                   std::uint64_t seed, std::uint64_t iter, bool strang = false);

double energy_symmetric(const TensorTrain<cplx>& state, const IsingModel& model);
double energy_mixed(const TensorTrain<cplx>& state, const TensorTrain<cplx>& reference,
                    const IsingModel& model);

TensorTrain<cplx> uniform_product_state(int d);
TensorTrain<cplx> random_state(int d, int rank, std::uint64_t seed);

// matrix-free Lanczos with full reorthogonalization; vector optional
std::pair<double, Eigen::VectorXd> lanczos_oracle(const IsingModel& model,
                                                  bool want_vector = false, int max_iter = 300,
                                                  double tol = 1e-12);

}  // namespace ttv
