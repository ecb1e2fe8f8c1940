#include "ttevolve/quantum.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>

#include "ttevolve/oracle.hpp"

namespace ttv {

namespace {

IsingModel from_edges(int d, double h, std::vector<std::pair<int, int>> edges) {
  IsingModel m;
  m.nsites = d;
  m.field = h;
  m.J = Eigen::MatrixXd::Zero(d, d);
  for (auto [i, j] : edges) {
    m.J(i, j) += 0.5;
    m.J(j, i) += 0.5;
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  m.edges = std::move(edges);
  return m;
}

}  // namespace

IsingModel ising_chain(int d, double h, bool periodic) {
  if (d < 2) throw StructuralError("chain needs at least two sites");
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < d; ++i) edges.push_back({i, i + 1});
  if (periodic && d > 2) edges.push_back({0, d - 1});
  return from_edges(d, h, edges);
}

std::vector<int> serpentine_order(int rows, int cols) {
  std::vector<int> order;  // order[grid site] = chain position
  order.resize(static_cast<std::size_t>(rows) * cols);
  int pos = 0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int col = (r % 2 == 0) ? c : cols - 1 - c;
      order[static_cast<std::size_t>(r) * cols + col] = pos++;
    }
  return order;
}

IsingModel ising_lattice(int rows, int cols, double h, bool periodic) {
  if (rows < 1 || cols < 1 || rows * cols < 2) throw StructuralError("lattice too small");
  const auto order = serpentine_order(rows, cols);
  auto site = [&](int r, int c) { return order[static_cast<std::size_t>(r) * cols + c]; };
  std::vector<std::pair<int, int>> edges;
  auto add = [&](int a, int b) {
    if (a > b) std::swap(a, b);
    if (a != b) edges.push_back({a, b});
  };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) add(site(r, c), site(r, c + 1));
      else if (periodic && cols > 2) add(site(r, c), site(r, 0));
      if (r + 1 < rows) add(site(r, c), site(r + 1, c));
      else if (periodic && rows > 2) add(site(r, c), site(0, c));
    }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return from_edges(rows * cols, h, edges);
}

HsDecomposition build_hs(const IsingModel& model, double dt, double eps) {
  if (!(dt > 0)) throw StructuralError("time step must be positive");
  const int d = model.nsites;
  if (!model.J.isApprox(model.J.transpose(), 1e-12))
    throw StructuralError("coupling matrix must be symmetric");
  Eigen::MatrixXd Jt = -model.J;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Jt);
  HsDecomposition hs;
  hs.dt = dt;
  hs.shift = std::max(0.0, -es.eigenvalues().minCoeff()) + eps;
  hs.U = es.eigenvectors();
  hs.lambda = (es.eigenvalues().array() + hs.shift).cwiseMax(0.0);
  hs.site_weight.resize(d, d);
  for (int j = 0; j < d; ++j)
    hs.site_weight.col(j) = std::sqrt(2.0 * dt * hs.lambda(j)) * hs.U.col(j);
  return hs;
}

Eigen::VectorXd sample_field_rotation(const HsDecomposition& hs, RngStream& rng) {
  Eigen::VectorXd k(hs.nfields());
  for (int j = 0; j < k.size(); ++j) k(j) = rng.normal();
  return hs.site_weight * k;
}

MatrixProductOperator<cplx> propagator_mpo(const Eigen::VectorXd& angles) {
  std::vector<Mat<cplx>> ops;
  ops.reserve(angles.size());
  for (int m = 0; m < angles.size(); ++m) {
    Mat<cplx> w = Mat<cplx>::Zero(2, 2);
    w(0, 0) = std::exp(cplx(0, angles(m)));
    w(1, 1) = std::exp(cplx(0, -angles(m)));
    ops.push_back(w);
  }
  return product_mpo(ops);
}

Mat<cplx> onebody_site(const IsingModel& model, double dt) {
  const double a = dt * model.field;
  Mat<cplx> w(2, 2);
  w << std::cosh(a), std::sinh(a), std::sinh(a), std::cosh(a);
  return w;
}

TensorTrain<cplx> apply_onebody(const IsingModel& model, double dt, const TensorTrain<cplx>& tt) {
  std::vector<Mat<cplx>> ops(tt.order(), onebody_site(model, dt));
  return mpo_apply(product_mpo(ops), tt);
}

ScaledTTEnsemble<cplx> propagate_ensemble(const TensorTrain<cplx>& base,
                                          const HsDecomposition& hs, long long N,
                                          std::uint64_t seed, std::uint64_t iter, int nthreads) {
  const int d = base.order();
  if (hs.nfields() != d) throw StructuralError("decomposition order does not match state");
  ScaledTTEnsemble<cplx> ens;
  ens.base = &base;
  ens.scale.assign(d, Mat<cplx>(N, 2));
  parallel_chunks(N, nthreads, [&](long long lo, long long hi, int) {
    for (long long i = lo; i < hi; ++i) {
      RngStream rng(mix_seed(seed, iter, static_cast<std::uint64_t>(i)));
      const Eigen::VectorXd angles = sample_field_rotation(hs, rng);
      for (int k = 0; k < d; ++k) {
        ens.scale[k](i, 0) = std::exp(cplx(0, angles(k)));
        ens.scale[k](i, 1) = std::exp(cplx(0, -angles(k)));
      }
    }
  });
  return ens;
}

namespace {

TensorTrain<cplx> normalized_or_throw(TensorTrain<cplx> tt) {
  const double nrm = tt_norm2(tt);
  if (!std::isfinite(nrm) || !(nrm > 0))
    throw NumericalError("re-estimated state has invalid norm " + std::to_string(nrm));
  return tt_scale(tt, cplx(1.0 / nrm, 0));
}

}  // namespace

TensorTrain<cplx> afqmc_step(const TensorTrain<cplx>& state, const IsingModel& model,
                             const HsDecomposition& hs, long long N, const SketchFamily& sketch,
                             double svd_threshold, std::uint64_t seed, std::uint64_t iter,
                             TrimReport* report, int nthreads, bool strang) {
  if (N < 1) throw StructuralError("need at least one propagator sample");
  const double body_dt = strang ? 0.5 * hs.dt : hs.dt;
  TensorTrain<cplx> psi = apply_onebody(model, body_dt, state);
  const auto ens = propagate_ensemble(psi, hs, N, seed, iter, nthreads);
  auto moments = accumulate_moments(ens, sketch, nthreads);
  auto [next, trim] = solve_cores(moments, svd_threshold);
  if (report) *report = trim;
  if (strang) next = apply_onebody(model, body_dt, next);
  return normalized_or_throw(std::move(next));
}

TensorTrain<cplx> afqmc_step_round(const TensorTrain<cplx>& state, const IsingModel& model,
                                   const HsDecomposition& hs, long long N, int max_rank,
                                   std::uint64_t seed, std::uint64_t iter, bool strang) {
  if (N < 1) throw StructuralError("need at least one propagator sample");
  if (max_rank < 1) throw StructuralError("rank cap must be positive");
  const double body_dt = strang ? 0.5 * hs.dt : hs.dt;
  TensorTrain<cplx> psi = apply_onebody(model, body_dt, state);
  const auto ens = propagate_ensemble(psi, hs, N, seed, iter, 1);
  const cplx w(1.0 / static_cast<double>(N), 0);
  TensorTrain<cplx> acc = tt_scale(materialize_particle(ens, 0), w);
  for (long long i = 1; i < N; ++i) {
    acc = tt_add(acc, tt_scale(materialize_particle(ens, i), w));
    const auto ranks = acc.ranks();
    if (*std::max_element(ranks.begin(), ranks.end()) > max_rank)
      acc = tt_round(acc, 0.0, max_rank);
  }
  acc = tt_round(acc, 0.0, max_rank);
  if (strang) acc = apply_onebody(model, body_dt, acc);
  return normalized_or_throw(std::move(acc));
}

namespace {

const Mat<cplx>& pauli_z() {
  static const Mat<cplx> m = [] {
    Mat<cplx> z(2, 2);
    z << 1, 0, 0, -1;
    return z;
  }();
  return m;
}

const Mat<cplx>& pauli_x() {
  static const Mat<cplx> m = [] {
    Mat<cplx> x(2, 2);
    x << 0, 1, 1, 0;
    return x;
  }();
  return m;
}

// <bra| H |ket> via one rank-1 MPO per Hamiltonian term
cplx h_matrix_element(const TensorTrain<cplx>& bra, const TensorTrain<cplx>& ket,
                      const IsingModel& model) {
  const int d = model.nsites;
  const Mat<cplx> eye = Mat<cplx>::Identity(2, 2);
  cplx acc = 0;
  std::vector<Mat<cplx>> ops(d, eye);
  for (auto [i, j] : model.edges) {
    ops[i] = pauli_z();
    ops[j] = pauli_z();
    acc += cplx(-model.edge_coupling(i, j), 0) * tt_inner(bra, mpo_apply(product_mpo(ops), ket));
    ops[i] = eye;
    ops[j] = eye;
  }
  for (int i = 0; i < d; ++i) {
    ops[i] = pauli_x();
    acc += cplx(-model.field, 0) * tt_inner(bra, mpo_apply(product_mpo(ops), ket));
    ops[i] = eye;
  }
  return acc;
}

}  // namespace

double energy_symmetric(const TensorTrain<cplx>& state, const IsingModel& model) {
  if (state.order() != model.nsites) throw StructuralError("state order does not match model");
  const double nrm2 = std::real(tt_inner(state, state));
  if (!(nrm2 > 0)) throw NumericalError("zero-norm state in energy estimator");
  const cplx e = h_matrix_element(state, state, model) / nrm2;
  if (std::abs(e.imag()) > 1e-8 * std::max(1.0, std::abs(e.real())))
    throw NumericalError("symmetric estimator has imaginary part " + std::to_string(e.imag()));
  return e.real();
}

double energy_mixed(const TensorTrain<cplx>& state, const TensorTrain<cplx>& reference,
                    const IsingModel& model) {
  if (state.order() != model.nsites) throw StructuralError("state order does not match model");
  const cplx overlap = tt_inner(reference, state);
  if (!(std::abs(overlap) > 1e-14 * tt_norm2(reference) * tt_norm2(state)))
    throw NumericalError("reference overlap vanished in mixed estimator");
  return std::real(h_matrix_element(reference, state, model) / overlap);
}

TensorTrain<cplx> uniform_product_state(int d) {
  const double a = 1.0 / std::sqrt(2.0);
  std::vector<Vec<cplx>> f(d, Vec<cplx>::Constant(2, cplx(a, 0)));
  return product_tt(f);
}

TensorTrain<cplx> random_state(int d, int rank, std::uint64_t seed) {
  RngStream rng(mix_seed(seed, 0x1417, 0));
  auto tt = random_tt<cplx>(std::vector<int>(d, 2), rank, rng);
  return tt_scale(tt, cplx(1.0 / tt_norm2(tt), 0));
}

std::pair<double, Eigen::VectorXd> lanczos_oracle(const IsingModel& model, bool want_vector,
                                                  int max_iter, double tol) {
  const int d = model.nsites;
  if (d > 16) throw StructuralError("state space too large for the dense oracle");
  const long long n = 1LL << d;
  // H is real symmetric in the Sz product basis
  Eigen::VectorXd diag = ising_diagonal(model);
  auto apply = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd w = diag.cwiseProduct(v);
    for (int i = 0; i < d; ++i) {
      const long long bit = 1LL << (d - 1 - i);
      for (long long s = 0; s < n; ++s) w(s) -= model.field * v(s ^ bit);
    }
    return w;
  };

  RngStream rng(0x9e3779b97f4a7c15ull);
  Eigen::VectorXd q = Eigen::VectorXd::NullaryExpr(n, [&](Eigen::Index) { return rng.normal(); });
  q.normalize();
  std::vector<Eigen::VectorXd> basis{q};
  std::vector<double> alpha, beta;
  double prev = 1e300;
  Eigen::VectorXd ritz;
  int m = 0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd w = apply(basis.back());
    const double a = basis.back().dot(w);
    alpha.push_back(a);
    w -= a * basis.back();
    if (basis.size() > 1) w -= beta.back() * basis[basis.size() - 2];
    for (const auto& b : basis) w -= b.dot(w) * b;  // full reorthogonalization
    const double bnorm = w.norm();
    m = static_cast<int>(alpha.size());
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      T(i, i) = alpha[i];
      if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    const double e0 = es.eigenvalues()(0);
    ritz = es.eigenvectors().col(0);
    if (std::abs(e0 - prev) < tol * std::max(1.0, std::abs(e0)) || bnorm < 1e-13) {
      prev = e0;
      break;
    }
    prev = e0;
    if (it + 1 == max_iter) break;
    beta.push_back(bnorm);
    basis.push_back(w / bnorm);
  }
  Eigen::VectorXd vec;
  if (want_vector) {
    vec = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < m; ++i) vec += ritz(i) * basis[i];
    vec.normalize();
  }
  return {prev, vec};
}

}  // namespace ttv
