#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "test_util.hpp"
#include "ttevolve/basis.hpp"
#include "ttevolve/oracle.hpp"
#include "ttevolve/sampler.hpp"
#include "ttevolve/sketch.hpp"

using namespace ttv;

namespace {

// categorical draws from a dense pmf, unflattened to index tuples
DiscreteDeltaEnsemble multinomial_samples(const Eigen::VectorXd& p, const std::vector<int>& dims,
                                          long long N, std::uint64_t seed) {
  Eigen::VectorXd cdf(p.size());
  std::partial_sum(p.data(), p.data() + p.size(), cdf.data());
  DiscreteDeltaEnsemble ens;
  ens.dims = dims;
  ens.idx.resize(N, static_cast<int>(dims.size()));
  RngStream rng(seed);
  for (long long i = 0; i < N; ++i) {
    const double u = rng.uniform() * cdf(cdf.size() - 1);
    long long f = std::upper_bound(cdf.data(), cdf.data() + cdf.size(), u) - cdf.data();
    f = std::min<long long>(f, cdf.size() - 1);
    for (int k = static_cast<int>(dims.size()) - 1; k >= 0; --k) {
      ens.idx(i, k) = static_cast<int>(f % dims[k]);
      f /= dims[k];
    }
  }
  return ens;
}

// nonnegative rank-2 mixture of two well-separated product distributions,
// peaked at opposite corners so the second bond singular value is robust
TensorTrain<double> rank2_density(const std::vector<int>& dims, std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<Vec<double>> f1, f2;
  for (int n : dims) {
    Vec<double> a(n), b(n);
    for (int x = 0; x < n; ++x) {
      a(x) = (x == 0) ? 1.0 : 0.15 + 0.1 * rng.uniform();
      b(x) = (x == n - 1) ? 1.0 : 0.15 + 0.1 * rng.uniform();
    }
    f1.push_back(a / a.sum());
    f2.push_back(b / b.sum());
  }
  return tt_add(tt_scale(product_tt(f1), 0.5), tt_scale(product_tt(f2), 0.5));
}

}  // namespace

TEST_CASE("random sketch: deterministic under seed, fresh under a new seed") {
  std::vector<int> dims(16, 2);
  auto s1 = SketchFamily::random(dims, 60, 7);
  auto s2 = SketchFamily::random(dims, 60, 7);
  auto s3 = SketchFamily::random(dims, 60, 8);
  for (int k = 0; k < 16; ++k) {
    CHECK(s1.left_factor(k) == s2.left_factor(k));
    CHECK(s1.right_factor(k) == s2.right_factor(k));
  }
  CHECK(s1.left_factor(0) != s3.left_factor(0));
}

TEST_CASE("random sketch: factor shapes are (size x mode cardinality) at every mode") {
  std::vector<int> dims(16, 2);
  auto s = SketchFamily::random(dims, 60, 11);
  CHECK(s.order() == 16);
  CHECK(s.sketch_size() == 60);
  for (int k = 0; k < 16; ++k) {
    CHECK(s.left_factor(k).rows() == 60);
    CHECK(s.left_factor(k).cols() == 2);
    CHECK(s.right_factor(k).rows() == 60);
  }
  CHECK(s.xi_size(0) == 1);
  CHECK(s.gamma_size(16) == 1);
  for (int b = 1; b < 16; ++b) {
    CHECK(s.xi_size(b) == 60);
    CHECK(s.gamma_size(b) == 60);
  }
  CHECK_THROWS_AS(s.xi_size(17), StructuralError);
  CHECK_THROWS_AS(SketchFamily::random(dims, 0, 1), StructuralError);
  CHECK_THROWS_AS(SketchFamily::random({2}, 4, 1), StructuralError);
}

TEST_CASE("cluster sketch: row counts follow the subset-times-function count") {
  auto basis20 = gaussian_kernel_basis(20);
  auto s = SketchFamily::cluster(basis20, 1, 10);
  CHECK(s.xi_size(9) == 180);   // 9 modes x 20 functions
  CHECK(s.gamma_size(1) == 180);  // modes 1..9
  CHECK(s.xi_size(1) == 20);
  CHECK(s.gamma_size(10) == 1);

  auto basis3 = gaussian_kernel_basis(3, 2.5, 5.0 / 2.0);
  auto s2 = SketchFamily::cluster(basis3, 2, 8);
  CHECK(s2.xi_size(4) == 54);  // C(4,2) * 3^2
  // windows narrower than the cluster size fall back to the window size
  CHECK(s2.xi_size(1) == 3);
  CHECK(s2.gamma_size(7) == 3);
  CHECK_THROWS_AS(SketchFamily::cluster(basis20, 3, 10), StructuralError);
}

TEST_CASE("discrete moments: single particle with all-ones sketches") {
  DiscreteDeltaEnsemble ens;
  ens.dims = {3, 2, 3};
  ens.idx.resize(1, 3);
  ens.idx << 2, 0, 1;
  auto sketch = SketchFamily::ones(ens.dims, 1);
  auto m = accumulate_moments(ens, sketch);
  REQUIRE(m.order() == 3);
  CHECK(m.count == 1);
  for (int k = 0; k < 3; ++k) {
    CHECK(m.pairs[k].A.rows() == 1);
    CHECK(m.pairs[k].A(0, 0) == doctest::Approx(1.0));
    for (int x = 0; x < ens.dims[k]; ++x)
      CHECK(m.pairs[k].B[x](0, 0) == doctest::Approx(x == ens.idx(0, k) ? 1.0 : 0.0));
  }
}

TEST_CASE("discrete moments: mean over particles and shard-merge equality") {
  RngStream rng(501);
  std::vector<int> dims{3, 3, 2, 3};
  DiscreteDeltaEnsemble ens;
  ens.dims = dims;
  const long long N = 257;
  ens.idx.resize(N, 4);
  for (long long i = 0; i < N; ++i)
    for (int k = 0; k < 4; ++k) ens.idx(i, k) = static_cast<int>(rng.bits() % dims[k]);

  auto sketch = SketchFamily::random(dims, 5, 99);
  auto whole = accumulate_moments(ens, sketch);

  DiscreteDeltaEnsemble lo, hi;
  lo.dims = hi.dims = dims;
  lo.idx = ens.idx.topRows(100);
  hi.idx = ens.idx.bottomRows(N - 100);
  auto m1 = accumulate_moments(lo, sketch);
  auto m2 = accumulate_moments(hi, sketch);
  m1.merge(m2);
  CHECK(m1.count == N);
  for (int k = 0; k < 4; ++k) {
    CHECK((m1.pairs[k].A - whole.pairs[k].A).cwiseAbs().maxCoeff() < 1e-13);
    for (int x = 0; x < dims[k]; ++x)
      CHECK((m1.pairs[k].B[x] - whole.pairs[k].B[x]).cwiseAbs().maxCoeff() < 1e-13);
  }

  // multithreaded accumulation matches single-threaded
  auto mt = accumulate_moments(ens, sketch, 4);
  for (int k = 0; k < 4; ++k)
    CHECK((mt.pairs[k].A - whole.pairs[k].A).cwiseAbs().maxCoeff() < 1e-13);

  DiscreteDeltaEnsemble empty;
  empty.dims = dims;
  empty.idx.resize(0, 4);
  CHECK_THROWS_AS(accumulate_moments(empty, sketch), StructuralError);
}

TEST_CASE_TEMPLATE("exact train as one-particle ensemble reproduces the direct contractions", T,
                   double, cplx) {
  RngStream rng(511);
  std::vector<int> dims{2, 3, 2, 2};
  auto tt = random_tt<T>(dims, 2, rng);
  auto sketch = SketchFamily::random(dims, 3, 77);
  auto ens = exact_ensemble(tt);
  auto m = accumulate_moments(ens, sketch);
  auto dense = densify(tt);

  // direct sums: prefix factor rows against suffix factor rows
  for (int k = 1; k < 4; ++k) {
    for (int xi = 0; xi < sketch.xi_size(k); ++xi)
      for (int g = 0; g < sketch.gamma_size(k); ++g) {
        T acc{};
        ttest::for_each_index(dims, [&](const std::vector<int>& idx) {
          double w = 1;
          for (int j = 0; j < k; ++j) w *= sketch.left_factor(j)(xi, idx[j]);
          for (int j = k; j < 4; ++j) w *= sketch.right_factor(j)(g, idx[j]);
          acc += w * dense.v(ttest::flat(idx, dims));
        });
        CHECK(std::abs(m.pairs[k].A(xi, g) - acc) < 1e-12);
      }
  }
  for (int k = 0; k < 4; ++k)
    for (int v = 0; v < dims[k]; ++v)
      for (int xi = 0; xi < sketch.xi_size(k); ++xi)
        for (int g = 0; g < sketch.gamma_size(k + 1); ++g) {
          T acc{};
          ttest::for_each_index(dims, [&](const std::vector<int>& idx) {
            if (idx[k] != v) return;
            double w = 1;
            for (int j = 0; j < k; ++j) w *= sketch.left_factor(j)(xi, idx[j]);
            for (int j = k + 1; j < 4; ++j) w *= sketch.right_factor(j)(g, idx[j]);
            acc += w * dense.v(ttest::flat(idx, dims));
          });
          CHECK(std::abs(m.pairs[k].B[v](xi, g) - acc) < 1e-12);
        }
}

TEST_CASE_TEMPLATE("exact recovery: moments of a train reproduce its values", T, double, cplx) {
  RngStream rng(521);
  std::vector<int> dims(5, 3);
  auto tt = random_tt<T>(dims, 2, rng);
  auto sketch = SketchFamily::random(dims, 8, 1234);
  TrimReport report;
  auto rec = estimate_tt_from_particles(exact_ensemble(tt), sketch, 1e-10, &report);

  double scale = densify(tt).v.cwiseAbs().maxCoeff();
  for (int probe = 0; probe < 1000; ++probe) {
    std::vector<int> idx(5);
    for (int k = 0; k < 5; ++k) idx[k] = static_cast<int>(rng.bits() % 3);
    CHECK(std::abs(tt_eval(rec, idx) - tt_eval(tt, idx)) < 1e-8 * scale);
  }
  for (int r : report.ranks) CHECK(r == 2);
}

TEST_CASE("trim: output bond dims equal the report ranks and follow the threshold") {
  RngStream rng(531);
  std::vector<int> dims(5, 3);
  auto tt = random_tt<double>(dims, 3, rng);
  auto sketch = SketchFamily::random(dims, 7, 4321);
  auto moments = accumulate_moments(exact_ensemble(tt), sketch);
  const double thr = 1e-2;
  auto [rec, report] = solve_cores(moments, thr);

  auto rk = rec.ranks();
  REQUIRE(static_cast<int>(report.ranks.size()) == 4);
  for (int k = 1; k < 5; ++k) CHECK(rk[k] == report.ranks[k - 1]);
  CHECK(report.threshold == thr);

  // recount against an independent SVD of each bond matrix
  for (int k = 1; k < 5; ++k) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(moments.pairs[k].A);
    const auto& sv = svd.singularValues();
    int expect = 0;
    while (expect < sv.size() && sv(expect) >= thr * sv(0)) ++expect;
    CHECK(report.ranks[k - 1] == std::max(expect, 1));
    for (double dropped : report.discarded[k - 1]) CHECK(dropped < thr * sv(0));
  }
}

TEST_CASE("trim: an oversized threshold forces a rank-1 estimate") {
  RngStream rng(541);
  std::vector<int> dims(4, 3);
  auto tt = random_tt<double>(dims, 3, rng);
  auto sketch = SketchFamily::random(dims, 6, 5);
  auto [rec, report] = solve_cores(accumulate_moments(exact_ensemble(tt), sketch), 2.0);
  CHECK(rec.max_rank() == 1);
  for (int r : report.ranks) CHECK(r == 1);
}

TEST_CASE("solve_cores: an all-zero bond matrix raises an error naming the bond") {
  Moments<double> m;
  m.count = 1;
  m.pairs.resize(3);
  m.pairs[0].A = Mat<double>::Ones(1, 1);
  m.pairs[0].B.assign(2, Mat<double>::Zero(1, 4));
  m.pairs[1].A = Mat<double>::Zero(4, 4);
  m.pairs[1].B.assign(2, Mat<double>::Zero(4, 4));
  m.pairs[2].A = Mat<double>::Identity(4, 4);
  m.pairs[2].B.assign(2, Mat<double>::Zero(4, 1));
  CHECK_THROWS_WITH_AS(solve_cores(m, 1e-3), doctest::Contains("bond 1"), NumericalError);
}

TEST_CASE("recovered density from 1e5 multinomial samples is close in total variation") {
  std::vector<int> dims{3, 3, 3, 3};
  auto density = rank2_density(dims, 606);
  auto dense = densify(density);
  auto ens = multinomial_samples(dense.v, dims, 100000, 17);
  auto sketch = SketchFamily::random(dims, 8, 23);
  auto rec = estimate_tt_from_particles(ens, sketch, 5e-2);
  auto recdense = densify(rec);
  recdense.v /= recdense.v.sum();
  CHECK(tv_distance(recdense.v, dense.v) <= 2e-2);
}

TEST_CASE("continuous moments: entries match direct basis-product sums") {
  auto basis = gaussian_kernel_basis(4, 2.5, 5.0 / 3.0);
  const int d = 3, n = 4;
  DeltaEnsemble ens;
  ens.points.resize(3, d);
  ens.points << 0.3, -1.2, 2.0, -0.5, 0.9, -2.2, 1.7, 0.1, 0.4;
  auto sketch = SketchFamily::cluster(basis, 1, d);
  auto m = accumulate_moments(ens, sketch);
  CHECK(m.continuous);
  CHECK(m.basis == &basis);

  // bond 1: rows enumerate (mode 0, fn), cols enumerate (mode in {1,2}, fn)
  REQUIRE(m.pairs[1].A.rows() == n);
  REQUIRE(m.pairs[1].A.cols() == 2 * n);
  for (int l = 0; l < n; ++l)
    for (int jm = 0; jm < 2; ++jm)
      for (int lm = 0; lm < n; ++lm) {
        double acc = 0;
        for (int i = 0; i < 3; ++i)
          acc += basis.eval(l, ens.points(i, 0)) * basis.eval(lm, ens.points(i, jm + 1));
        acc /= 3.0;
        CHECK(m.pairs[1].A(l, jm * n + lm) == doctest::Approx(acc).epsilon(1e-13));
      }

  // B at the last mode: rows are prefix pairs over modes {0,1}
  for (int v = 0; v < n; ++v)
    for (int jm = 0; jm < 2; ++jm)
      for (int l = 0; l < n; ++l) {
        double acc = 0;
        for (int i = 0; i < 3; ++i)
          acc += basis.eval(l, ens.points(i, jm)) * basis.eval(v, ens.points(i, 2));
        acc /= 3.0;
        CHECK(m.pairs[2].B[v](jm * n + l, 0) == doctest::Approx(acc).epsilon(1e-13));
      }

  DeltaEnsemble empty;
  empty.points.resize(0, d);
  CHECK_THROWS_AS(accumulate_moments(empty, sketch), StructuralError);
  CHECK_THROWS_AS(accumulate_moments(ens, SketchFamily::random({4, 4, 4}, 3, 1)),
                  StructuralError);
}

TEST_CASE("continuous shard merge equals the single pass") {
  RngStream rng(551);
  auto basis = gaussian_kernel_basis(5, 2.5, 1.25);
  const int d = 4;
  DeltaEnsemble ens;
  ens.points.resize(40, d);
  for (int i = 0; i < 40; ++i)
    for (int k = 0; k < d; ++k) ens.points(i, k) = 2.5 * (2.0 * rng.uniform() - 1.0);
  for (int c : {1, 2}) {
    auto sketch = SketchFamily::cluster(basis, c, d);
    auto whole = accumulate_moments(ens, sketch);
    DeltaEnsemble a, b;
    a.points = ens.points.topRows(13);
    b.points = ens.points.bottomRows(27);
    auto ma = accumulate_moments(a, sketch);
    auto mb = accumulate_moments(b, sketch);
    ma.merge(mb);
    for (int k = 0; k < d; ++k) {
      CHECK((ma.pairs[k].A - whole.pairs[k].A).cwiseAbs().maxCoeff() < 1e-13);
      for (int x = 0; x < basis.size(); ++x)
        CHECK((ma.pairs[k].B[x] - whole.pairs[k].B[x]).cwiseAbs().maxCoeff() < 1e-13);
    }
  }
}

TEST_CASE("one delta particle sketches to a rank-1 bump at the particle") {
  auto basis = gaussian_kernel_basis();
  const int d = 3;
  DeltaEnsemble ens;
  ens.points.resize(1, d);
  ens.points << 0.8, -1.1, 0.2;
  auto sketch = SketchFamily::cluster(basis, 1, d);
  auto rec = estimate_tt_from_particles(ens, sketch, 1e-6);
  CHECK(rec.max_rank() == 1);
  for (int k = 0; k < d; ++k) {
    auto at = [&](double x) {
      double v = 0;
      for (int l = 0; l < basis.size(); ++l) v += rec.core(k).slices[l](0, 0) * basis.eval(l, x);
      return std::abs(v);
    };
    const double y = ens.points(0, k);
    CHECK(at(y) > 3.0 * at(y + 1.2));
    CHECK(at(y) > 3.0 * at(y - 1.2));
  }
}

TEST_CASE("moment noise shrinks like one over sqrt(N)") {
  std::vector<int> dims{3, 3, 3};
  auto sketch = SketchFamily::random(dims, 4, 3);
  const std::vector<long long> sizes{250, 1000, 4000, 16000};
  const int reps = 16;
  std::vector<double> logn, logstd;
  for (long long N : sizes) {
    // pooled std over all entries of the middle bond matrix
    std::vector<Eigen::MatrixXd> As;
    for (int r = 0; r < reps; ++r) {
      DiscreteDeltaEnsemble ens;
      ens.dims = dims;
      ens.idx.resize(N, 3);
      RngStream rng(mix_seed(1000 + r, static_cast<std::uint64_t>(N)));
      for (long long i = 0; i < N; ++i)
        for (int k = 0; k < 3; ++k) ens.idx(i, k) = static_cast<int>(rng.bits() % 3);
      As.push_back(accumulate_moments(ens, sketch).pairs[1].A);
    }
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(As[0].rows(), As[0].cols());
    for (const auto& a : As) mean += a;
    mean /= reps;
    double var = 0;
    for (const auto& a : As) var += (a - mean).squaredNorm();
    var /= (reps - 1) * static_cast<double>(mean.size());
    logn.push_back(std::log(static_cast<double>(N)));
    logstd.push_back(0.5 * std::log(var));
  }
  // least-squares slope of log std against log N
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < logn.size(); ++i) mx += logn[i], my += logstd[i];
  mx /= logn.size();
  my /= logn.size();
  double num = 0, den = 0;
  for (std::size_t i = 0; i < logn.size(); ++i) {
    num += (logn[i] - mx) * (logstd[i] - my);
    den += (logn[i] - mx) * (logn[i] - mx);
  }
  const double slope = num / den;
  CHECK(slope == doctest::Approx(-0.5).epsilon(0.2));
}

TEST_CASE("moment dump round-trips through the array container") {
  RngStream rng(561);
  std::vector<int> dims{2, 2, 2};
  auto tt = random_tt<double>(dims, 2, rng);
  auto sketch = SketchFamily::random(dims, 3, 55);
  auto m = accumulate_moments(exact_ensemble(tt), sketch);
  auto path = ttest::tmp_path("moments.tta");
  dump_moments(path, m);
  auto arrays = load_arrays_real(path);
  REQUIRE(arrays.size() == 3 + 2 * 3);  // per mode: A then the B slices
  CHECK(arrays[0] == m.pairs[0].A);
  CHECK(arrays[3] == m.pairs[1].A);
  CHECK((arrays[4] - m.pairs[1].B[0]).cwiseAbs().maxCoeff() == 0.0);
}
