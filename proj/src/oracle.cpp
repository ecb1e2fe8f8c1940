#include "ttevolve/oracle.hpp"

#include <cmath>

namespace ttv {

template <class T>
DenseState<T> densify(const TensorTrain<T>& tt) {
  long long total = 1;
  for (int n : tt.dims()) {
    total *= n;
    if (total > (1LL << 16)) throw StructuralError("dense grid exceeds 2^16 entries");
  }
  // expand left to right; rows enumerate already-fixed indices (mode 0 slowest)
  Mat<T> acc = Mat<T>::Ones(1, 1);
  for (int k = 0; k < tt.order(); ++k) {
    const auto& core = tt.core(k);
    Mat<T> next(acc.rows() * core.n(), core.r1());
    for (int x = 0; x < core.n(); ++x) {
      Mat<T> block = acc * core.slices[x];
      for (Eigen::Index r = 0; r < acc.rows(); ++r) next.row(r * core.n() + x) = block.row(r);
    }
    acc = std::move(next);
  }
  DenseState<T> out;
  out.dims = tt.dims();
  out.v = acc.col(0);
  return out;
}

template DenseState<double> densify(const TensorTrain<double>&);
template DenseState<cplx> densify(const TensorTrain<cplx>&);

Eigen::VectorXd ising_diagonal(const IsingModel& model) {
  const int d = model.nsites;
  if (d > 16) throw StructuralError("state space too large for the dense oracle");
  const long long n = 1LL << d;
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  for (auto [i, j] : model.edges) {
    const double c = model.edge_coupling(i, j);
    const long long bi = 1LL << (d - 1 - i), bj = 1LL << (d - 1 - j);
    for (long long s = 0; s < n; ++s) {
      const double zi = (s & bi) ? -1.0 : 1.0;
      const double zj = (s & bj) ? -1.0 : 1.0;
      diag(s) -= c * zi * zj;
    }
  }
  return diag;
}

Vec<cplx> dense_coupling_apply(const IsingModel& model, const Vec<cplx>& v) {
  const Eigen::VectorXd diag = ising_diagonal(model);
  if (v.size() != diag.size()) throw StructuralError("vector length does not match model");
  return diag.cast<cplx>().cwiseProduct(v);
}

Vec<cplx> dense_hamiltonian_apply(const IsingModel& model, const Vec<cplx>& v) {
  Vec<cplx> w = dense_coupling_apply(model, v);
  const int d = model.nsites;
  const long long n = 1LL << d;
  for (int i = 0; i < d; ++i) {
    const long long bit = 1LL << (d - 1 - i);
    for (long long s = 0; s < n; ++s) w(s) -= model.field * v(s ^ bit);
  }
  return w;
}

Vec<cplx> dense_expm_apply(const std::function<Vec<cplx>(const Vec<cplx>&)>& op, double dt,
                           const Vec<cplx>& v, double tol) {
  if (v.size() > (1LL << 12)) throw StructuralError("dense grid exceeds 2^12 entries");
  if (dt == 0) return v;
  for (int substeps = 1; substeps <= (1 << 20); substeps *= 2) {
    const double h = dt / substeps;
    Vec<cplx> w = v;
    bool ok = true;
    for (int s = 0; s < substeps && ok; ++s) {
      Vec<cplx> acc = w, term = w;
      ok = false;
      for (int j = 1; j <= 40; ++j) {
        term = op(term) * cplx(-h / j, 0);
        acc += term;
        if (term.norm() <= tol * acc.norm()) {
          ok = true;
          break;
        }
      }
      w = std::move(acc);
    }
    if (ok) return w;
  }
  throw NumericalError("matrix exponential series failed to converge");
}

Eigen::VectorXd quad_marginal_1d(const std::function<double(double)>& potential, double beta,
                                 const QuadRule& rule) {
  Eigen::VectorXd f(rule.nodes.size());
  for (Eigen::Index q = 0; q < f.size(); ++q) {
    const double val = std::exp(-beta * potential(rule.nodes(q)));
    if (!std::isfinite(val)) throw NumericalError("Boltzmann weight overflowed on the grid");
    f(q) = val;
  }
  const double z = rule.weights.dot(f);
  if (!(z > 0)) throw NumericalError("Boltzmann normalization vanished");
  return f / z;
}

template <class T>
TensorTrain<T> tt_from_dense(const std::vector<int>& dims, const Vec<T>& v, double tol,
                             int max_rank) {
  long long total = 1;
  for (int n : dims) total *= n;
  if (total != v.size()) throw StructuralError("dense length does not match dims");
  if (total > (1LL << 16)) throw StructuralError("dense grid exceeds 2^16 entries");

  std::vector<TTCore<T>> cores(dims.size());
  // rows: (left rank, current mode); cols: remaining modes
  Mat<T> rest(1, total);
  for (long long i = 0; i < total; ++i) rest(0, i) = v(i);
  int r = 1;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    const int n = dims[k];
    const long long tail = rest.cols() / n;
    Mat<T> unf(static_cast<Eigen::Index>(r) * n, tail);
    for (int a = 0; a < r; ++a)
      for (int x = 0; x < n; ++x)
        unf.row(static_cast<Eigen::Index>(a) * n + x) =
            rest.row(a).segment(static_cast<Eigen::Index>(x) * tail, tail);
    Mat<T> U, V;
    Eigen::VectorXd S;
    detail::thin_svd(unf, U, S, V);
    int keep = 0;
    while (keep < S.size() && S(keep) > tol * S(0)) ++keep;
    keep = std::max(keep, 1);
    if (max_rank > 0) keep = std::min(keep, max_rank);
    cores[k].slices.resize(n);
    for (int x = 0; x < n; ++x) {
      cores[k].slices[x].resize(r, keep);
      for (int a = 0; a < r; ++a)
        cores[k].slices[x].row(a) = U.row(static_cast<Eigen::Index>(a) * n + x).leftCols(keep);
    }
    rest = S.head(keep).template cast<T>().asDiagonal() * V.leftCols(keep).adjoint();
    r = keep;
  }
  const int n = dims.back();
  cores.back().slices.resize(n);
  for (int x = 0; x < n; ++x) cores.back().slices[x] = rest.col(x);
  return TensorTrain<T>(std::move(cores));
}

template TensorTrain<double> tt_from_dense(const std::vector<int>&, const Vec<double>&, double,
                                           int);
template TensorTrain<cplx> tt_from_dense(const std::vector<int>&, const Vec<cplx>&, double, int);

}  // namespace ttv
