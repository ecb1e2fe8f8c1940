#include "doctest.h"

#include <cmath>
#include <algorithm>
#include <complex>
#include <vector>

#include "test_util.hpp"
#include "ttevolve/oracle.hpp"
#include "ttevolve/quantum.hpp"
#include "ttevolve/tt.hpp"

using namespace ttv;

namespace {

// +1/-1 spin of mode k for flat basis index s (index 0 carries Sz = +1)
double spin(long long s, int k, int d) { return (s >> (d - 1 - k)) & 1 ? -1.0 : 1.0; }

double dense_energy(const Vec<cplx>& v, const IsingModel& m) {
  const auto hv = dense_hamiltonian_apply(m, v);
  return std::real(v.dot(hv)) / v.squaredNorm();
}

TensorTrain<cplx> basis_product_state(const std::vector<int>& bits) {
  std::vector<Vec<cplx>> f;
  for (int b : bits) {
    Vec<cplx> site = Vec<cplx>::Zero(2);
    site(b) = 1;
    f.push_back(site);
  }
  return product_tt(f);
}

IsingModel decoupled_sites(int d, double h) {
  IsingModel m;
  m.nsites = d;
  m.field = h;
  m.J = Eigen::MatrixXd::Zero(d, d);
  return m;
}

}  // namespace

TEST_CASE("chain couplings: one edge per nearest-neighbor pair plus the closing bond") {
  auto open4 = ising_chain(4, 1.0, false);
  CHECK(open4.edges.size() == 3);
  auto cyc4 = ising_chain(4, 1.0, true);
  CHECK(cyc4.edges.size() == 4);
  const bool has_closing =
      std::find(cyc4.edges.begin(), cyc4.edges.end(), std::pair<int, int>{0, 3}) !=
      cyc4.edges.end();
  CHECK(has_closing);
  for (auto [i, j] : cyc4.edges) {
    CHECK(cyc4.J(i, j) == doctest::Approx(0.5));
    CHECK(cyc4.J(j, i) == doctest::Approx(0.5));
    CHECK(cyc4.edge_coupling(i, j) == doctest::Approx(1.0));
  }
  auto two = ising_chain(2, 0.5, true);  // no distinct closing bond on two sites
  CHECK(two.edges.size() == 1);
  CHECK(ising_chain(5, 1.0, true).edges.size() == 5);
  CHECK_THROWS_AS(ising_chain(1, 1.0), StructuralError);
}

TEST_CASE("boustrophedon ordering keeps lattice neighbors close on the chain") {
  auto row = serpentine_order(1, 5);
  for (int c = 0; c < 5; ++c) CHECK(row[c] == c);
  auto sq = serpentine_order(2, 2);
  CHECK(sq[0] == 0);
  CHECK(sq[1] == 1);
  CHECK(sq[2] == 3);  // second row is traversed right to left
  CHECK(sq[3] == 2);
  auto order = serpentine_order(4, 4);
  auto open_lat = ising_lattice(4, 4, 1.0, false);
  CHECK(open_lat.edges.size() == 24);
  int worst = 0;
  for (auto [i, j] : open_lat.edges) worst = std::max(worst, j - i);
  CHECK(worst == 7);
  auto lat = ising_lattice(4, 4, 1.0, true);
  CHECK(lat.edges.size() == 32);
  CHECK(lat.J.isApprox(lat.J.transpose()));
  for (auto [i, j] : lat.edges) CHECK(lat.edge_coupling(i, j) == doctest::Approx(1.0));
  CHECK_THROWS_AS(ising_lattice(1, 1, 1.0), StructuralError);
}

TEST_CASE("field decomposition averages back to the two-body propagator exactly") {
  auto model = ising_chain(5, 1.0, true);
  const double dt = 0.04;
  auto hs = build_hs(model, dt);
  const int d = model.nsites;
  // E[exp(i theta . z)] with theta = W k, k standard normal, equals
  // exp(-|W^T z|^2 / 2); this must match exp(dt z^T J z) up to the constant
  // shift factor for every spin configuration
  for (long long s = 0; s < (1LL << d); ++s) {
    Eigen::VectorXd z(d);
    for (int k = 0; k < d; ++k) z(k) = spin(s, k, d);
    const double gauss = std::exp(-0.5 * (hs.site_weight.transpose() * z).squaredNorm());
    const double target = std::exp(dt * z.dot(model.J * z)) * std::exp(-dt * hs.shift * d);
    CHECK(gauss == doctest::Approx(target).epsilon(1e-10));
  }
}

TEST_CASE("cycle coupling spectrum matches the closed-form cosine branch") {
  const int d = 16;
  auto hs = build_hs(ising_chain(d, 1.0, true), 0.02);
  std::vector<double> expect;
  for (int m = 0; m < d; ++m)
    expect.push_back(1.0 + 1e-9 - std::cos(2.0 * M_PI * m / d));
  std::sort(expect.begin(), expect.end());
  for (int m = 0; m < d; ++m) CHECK(hs.lambda(m) == doctest::Approx(expect[m]).epsilon(1e-8));
  CHECK(hs.shift == doctest::Approx(1.0 + 1e-9));
}

TEST_CASE("decomposition rejects bad steps and asymmetric couplings") {
  auto model = ising_chain(3, 1.0);
  CHECK_THROWS_AS(build_hs(model, 0.0), StructuralError);
  CHECK_THROWS_AS(build_hs(model, -0.1), StructuralError);
  auto skew = model;
  skew.J(0, 1) += 0.25;
  CHECK_THROWS_AS(build_hs(skew, 0.1), StructuralError);
}

TEST_CASE("sampled phase ensemble is an unbiased estimate of the coupling factor") {
  auto model = ising_chain(6, 1.0, true);
  const double dt = 0.01;
  auto hs = build_hs(model, dt);
  const int d = model.nsites;
  auto base = uniform_product_state(d);
  const long long N = 30000;
  auto ens = propagate_ensemble(base, hs, N, 77, 3);
  const long long n = 1LL << d;
  Vec<cplx> mean = Vec<cplx>::Zero(n);
  for (long long i = 0; i < N; ++i)
    for (long long s = 0; s < n; ++s) {
      cplx phase = 1;
      for (int k = 0; k < d; ++k) phase *= ens.scale[k](i, (s >> (d - 1 - k)) & 1);
      mean(s) += phase;
    }
  mean /= static_cast<double>(N);
  const double norm = std::exp(-dt * hs.shift * d);
  for (long long s = 0; s < n; ++s) {
    Eigen::VectorXd z(d);
    for (int k = 0; k < d; ++k) z(k) = spin(s, k, d);
    const double target = std::exp(dt * z.dot(model.J * z)) * norm;
    CHECK(std::abs(mean(s) - cplx(target, 0)) <= 2e-2 * target);
  }
}

TEST_CASE("phase ensemble is keyed by seed and sweep and validated against the state") {
  auto model = ising_chain(4, 1.0);
  auto hs = build_hs(model, 0.05);
  auto base = uniform_product_state(4);
  auto a = propagate_ensemble(base, hs, 50, 5, 1, 1);
  auto b = propagate_ensemble(base, hs, 50, 5, 1, 4);
  auto c = propagate_ensemble(base, hs, 50, 5, 2, 1);
  for (int k = 0; k < 4; ++k) {
    CHECK(a.scale[k] == b.scale[k]);
    CHECK(a.scale[k] != c.scale[k]);
  }
  auto small = uniform_product_state(3);
  CHECK_THROWS_AS(propagate_ensemble(small, hs, 10, 5, 1), StructuralError);
}

TEST_CASE("one-body site factor: hyperbolic entries and the zero-field identity") {
  IsingModel m = decoupled_sites(2, 1.0);
  auto w = onebody_site(m, std::log(2.0));  // cosh(ln 2) = 5/4, sinh(ln 2) = 3/4
  CHECK(std::real(w(0, 0)) == doctest::Approx(1.25));
  CHECK(std::real(w(0, 1)) == doctest::Approx(0.75));
  CHECK(std::real(w(1, 0)) == doctest::Approx(0.75));
  CHECK(std::real(w(1, 1)) == doctest::Approx(1.25));
  m.field = 0.0;
  auto id = onebody_site(m, 0.3);
  CHECK(std::abs(id(0, 0) - cplx(1, 0)) <= 1e-15);
  CHECK(std::abs(id(0, 1)) <= 1e-15);
}

TEST_CASE("one-body factor matches the dense matrix exponential of the field term") {
  const int d = 5;
  auto model = ising_chain(d, 0.7, true);
  const double dt = 0.08;
  auto state = random_state(d, 3, 21);
  auto got = densify(apply_onebody(model, dt, state));
  // exp(dt h sum Sx) restricted to the field part of H
  IsingModel field_only = decoupled_sites(d, model.field);
  auto ref = dense_expm_apply(
      [&](const Vec<cplx>& v) { return dense_hamiltonian_apply(field_only, v); }, dt,
      densify(state).v);
  CHECK(ttest::rel_sup_err(got.v, ref) <= 1e-10);
}

TEST_CASE("diagonal phase operator applies per-site rotations") {
  Eigen::VectorXd angles(3);
  angles << 0.3, -1.1, 0.7;
  auto op = propagator_mpo(angles);
  auto state = random_state(3, 2, 9);
  auto got = densify(mpo_apply(op, state));
  auto ref = densify(state);
  for (long long s = 0; s < 8; ++s) {
    cplx phase = 1;
    for (int k = 0; k < 3; ++k) phase *= std::exp(cplx(0, angles(k) * spin(s, k, 3)));
    ref.v(s) *= phase;
  }
  CHECK(ttest::rel_sup_err(got.v, ref.v) <= 1e-13);
  auto ident = propagator_mpo(Eigen::VectorXd::Zero(3));
  auto same = densify(mpo_apply(ident, state));
  CHECK(ttest::rel_sup_err(same.v, densify(state).v) <= 1e-15);
}

TEST_CASE("energy of aligned spins on a coupled pair is minus the bond strength") {
  auto model = ising_chain(2, 1.3);
  auto up = basis_product_state({0, 0});
  CHECK(energy_symmetric(up, model) == doctest::Approx(-1.0).epsilon(1e-12));
  auto anti = basis_product_state({0, 1});
  CHECK(energy_symmetric(anti, model) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("single free spin along the field has energy minus the field") {
  IsingModel m = decoupled_sites(1, 0.9);
  auto plus = uniform_product_state(1);
  CHECK(energy_symmetric(plus, m) == doctest::Approx(-0.9).epsilon(1e-12));
}

TEST_CASE("symmetric energy agrees with the dense quadratic form") {
  const int d = 8;
  auto model = ising_chain(d, 1.0, true);
  auto state = random_state(d, 3, 33);
  const double got = energy_symmetric(state, model);
  const double ref = dense_energy(densify(state).v, model);
  CHECK(got == doctest::Approx(ref).epsilon(1e-10));
  auto wrong = random_state(d - 1, 2, 1);
  CHECK_THROWS_AS(energy_symmetric(wrong, model), StructuralError);
}

TEST_CASE("mixed energy with the state itself reduces to the symmetric value") {
  auto model = ising_chain(6, 1.0, true);
  auto state = random_state(6, 3, 14);
  CHECK(energy_mixed(state, state, model) ==
        doctest::Approx(energy_symmetric(state, model)).epsilon(1e-12));
}

TEST_CASE("mixed energy against the exact ground state returns the ground energy") {
  const int d = 8;
  auto model = ising_chain(d, 1.0, true);
  auto [e0, gvec] = lanczos_oracle(model, true);
  Vec<cplx> gc = gvec.cast<cplx>();
  auto ground = tt_from_dense(std::vector<int>(d, 2), gc);
  auto state = random_state(d, 3, 50);
  // accuracy is limited by the iterative reference eigenvector's residual
  CHECK(energy_mixed(state, ground, model) == doctest::Approx(e0).epsilon(1e-5));
}

TEST_CASE("both estimators ignore a global phase on the state") {
  auto model = ising_chain(5, 1.0, true);
  auto state = random_state(5, 2, 8);
  auto rotated = tt_scale(state, std::exp(cplx(0, 0.7)));
  CHECK(energy_symmetric(rotated, model) ==
        doctest::Approx(energy_symmetric(state, model)).epsilon(1e-12));
  auto ref = uniform_product_state(5);
  CHECK(energy_mixed(rotated, ref, model) ==
        doctest::Approx(energy_mixed(state, ref, model)).epsilon(1e-12));
}

TEST_CASE("power step with one particle reproduces that propagated particle") {
  const int d = 5;
  auto model = ising_chain(d, 0.8, true);
  auto hs = build_hs(model, 0.05);
  auto state = uniform_product_state(d);
  auto psi = apply_onebody(model, 0.05, state);
  auto ens = propagate_ensemble(psi, hs, 1, 99, 7);
  auto expect = materialize_particle(ens, 0);
  expect = tt_scale(expect, cplx(1.0 / tt_norm2(expect), 0));
  auto exd = densify(expect);

  auto round_got = afqmc_step_round(state, model, hs, 1, 32, 99, 7);
  CHECK(ttest::rel_sup_err(densify(round_got).v, exd.v) <= 1e-12);

  auto sketch = SketchFamily::random(std::vector<int>(d, 2), 8, 3);
  auto sk_got = afqmc_step(state, model, hs, 1, sketch, 1e-8, 99, 7);
  CHECK(ttest::rel_sup_err(densify(sk_got).v, exd.v) <= 1e-8);
}

TEST_CASE("decoupled sites leave the uniform state fixed under a power step") {
  const int d = 4;
  IsingModel m = decoupled_sites(d, 1.0);
  auto hs = build_hs(m, 0.05);
  auto state = uniform_product_state(d);
  auto sketch = SketchFamily::random(std::vector<int>(d, 2), 6, 11);
  TrimReport report;
  auto next = afqmc_step(state, m, hs, 200, sketch, 1e-3, 4, 0, &report);
  CHECK(tt_norm2(next) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(tt_inner(state, next)) >= 1.0 - 1e-6);
  for (std::size_t k = 0; k + 1 < report.ranks.size(); ++k) CHECK(report.ranks[k] >= 1);

  auto rounded = afqmc_step_round(state, m, hs, 32, 4, 4, 0);
  CHECK(std::abs(tt_inner(state, rounded)) >= 1.0 - 1e-6);

  auto strang = afqmc_step(state, m, hs, 200, sketch, 1e-3, 4, 0, nullptr, 1, true);
  CHECK(std::abs(tt_inner(state, strang)) >= 1.0 - 1e-6);
}

TEST_CASE("repeated power steps drive the uniform state toward the ground energy") {
  const int d = 6;
  auto model = ising_chain(d, 1.0, true);
  auto hs = build_hs(model, 0.05);
  auto sketch = SketchFamily::random(std::vector<int>(d, 2), 24, 2);
  auto state = uniform_product_state(d);
  const double e_start = energy_symmetric(state, model);
  CHECK(e_start == doctest::Approx(-6.0).epsilon(1e-10));
  for (int it = 0; it < 6; ++it)
    state = afqmc_step(state, model, hs, 4000, sketch, 1e-3, 123, it);
  CHECK(tt_norm2(state) == doctest::Approx(1.0).epsilon(1e-10));
  const double e_end = energy_symmetric(state, model);
  const double e0 = lanczos_oracle(model).first;
  CHECK(e_end < e_start - 0.5);
  CHECK(e_end >= e0 - 0.2);  // variational up to sampling noise
}

TEST_CASE("power steps reject empty ensembles and degenerate rank caps") {
  auto model = ising_chain(3, 1.0);
  auto hs = build_hs(model, 0.05);
  auto state = uniform_product_state(3);
  auto sketch = SketchFamily::random(std::vector<int>(3, 2), 4, 1);
  CHECK_THROWS_AS(afqmc_step(state, model, hs, 0, sketch, 1e-3, 1, 0), StructuralError);
  CHECK_THROWS_AS(afqmc_step_round(state, model, hs, 0, 4, 1, 0), StructuralError);
  CHECK_THROWS_AS(afqmc_step_round(state, model, hs, 10, 0, 1, 0), StructuralError);
}

TEST_CASE("reference states: uniform amplitudes and normalized random trains") {
  auto u = uniform_product_state(3);
  const double a = 1.0 / std::sqrt(8.0);
  ttest::for_each_index({2, 2, 2}, [&](const std::vector<int>& idx) {
    CHECK(std::abs(tt_eval(u, idx) - cplx(a, 0)) <= 1e-15);
  });
  auto r1 = random_state(6, 3, 17);
  auto r2 = random_state(6, 3, 17);
  CHECK(tt_norm2(r1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ttest::rel_sup_err(densify(r1).v, densify(r2).v) == 0.0);
}
