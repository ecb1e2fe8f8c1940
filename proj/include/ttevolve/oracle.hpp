#pragma once

#include <functional>
#include <vector>

#include "ttevolve/basis.hpp"
#include "ttevolve/quantum.hpp"
#include "ttevolve/tt.hpp"

namespace ttv {

// Brute-force references used by tests and acceptance runs only.

template <class T>
struct DenseState {
  Vec<T> v;
  std::vector<int> dims;
};

// exact dense contraction; refuses grids above 2^16 entries
template <class T>
DenseState<T> densify(const TensorTrain<T>& tt);

// diagonal of H in the Sz product basis (mode 0 = most significant bit,
// index 0 = Sz eigenvalue +1)
Eigen::VectorXd ising_diagonal(const IsingModel& model);

// matrix-free H v over the full 2^d space
Vec<cplx> dense_hamiltonian_apply(const IsingModel& model, const Vec<cplx>& v);
// two-body part only (the coupling sum, no transverse field)
Vec<cplx> dense_coupling_apply(const IsingModel& model, const Vec<cplx>& v);

// exp(-dt op) v by Taylor series with adaptive substepping; cap 2^12 entries
Vec<cplx> dense_expm_apply(const std::function<Vec<cplx>(const Vec<cplx>&)>& op, double dt,
                           const Vec<cplx>& v, double tol = 1e-12);

// normalized Boltzmann density exp(-beta V)/Z evaluated on a quadrature rule
Eigen::VectorXd quad_marginal_1d(const std::function<double(double)>& potential, double beta,
                                 const QuadRule& rule);

// exact sequential-SVD factorization of a dense tensor (row-major, mode 0
// slowest); keeps singular values > tol * sigma_max per unfolding
template <class T>
TensorTrain<T> tt_from_dense(const std::vector<int>& dims, const Vec<T>& v, double tol = 1e-12,
                             int max_rank = -1);

}  // namespace ttv
