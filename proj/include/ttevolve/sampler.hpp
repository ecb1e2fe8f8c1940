#pragma once

#include <cstdint>
#include <vector>

#include "ttevolve/common.hpp"
#include "ttevolve/sketch.hpp"
#include "ttevolve/tt.hpp"

namespace ttv {

// suffix sums env[k](rho) = sum over index tuples of modes k..d-1 of the
// partial chain product; env[d] = [1]
inline std::vector<Eigen::VectorXd> right_marginal_env(const TensorTrain<double>& p) {
  const int d = p.order();
  std::vector<Eigen::VectorXd> env(d + 1);
  env[d] = Eigen::VectorXd::Ones(1);
  for (int k = d - 1; k >= 0; --k) {
    env[k] = Eigen::VectorXd::Zero(p.core(k).r0());
    for (const auto& s : p.core(k).slices) env[k] += s * env[k + 1];
  }
  return env;
}

// exact ancestral sampling from a tensor-train probability mass function:
// mode k is drawn from the conditional given modes < k, computed by chain
// products against the suffix sums. Small negative conditionals (roundoff
// in the train) are clipped; a nonpositive total is an error.
inline DiscreteDeltaEnsemble sample_tt_indices(const TensorTrain<double>& p, long long N,
                                               std::uint64_t seed, int nthreads = 1) {
  const int d = p.order();
  const auto env = right_marginal_env(p);
  if (!(env[0](0) > 0)) throw NumericalError("density train has nonpositive total mass");
  DiscreteDeltaEnsemble ens;
  ens.dims = p.dims();
  ens.idx.resize(N, d);
  parallel_chunks(N, nthreads, [&](long long lo, long long hi, int) {
    for (long long i = lo; i < hi; ++i) {
      RngStream rng(mix_seed(seed, 0xd1ce, i));
      Eigen::RowVectorXd a = Eigen::RowVectorXd::Ones(1);
      for (int k = 0; k < d; ++k) {
        const int n = p.core(k).n();
        Eigen::VectorXd w(n);
        for (int x = 0; x < n; ++x)
          w(x) = std::max(0.0, (a * p.core(k).slices[x] * env[k + 1]).value());
        const double total = w.sum();
        if (!(total > 0)) throw NumericalError("conditional mass vanished while sampling");
        double u = rng.uniform() * total;
        int x = 0;
        while (x + 1 < n && u > w(x)) u -= w(x), ++x;
        ens.idx(i, k) = x;
        a = a * p.core(k).slices[x];
        a /= a.dot(env[k + 1]);  // keep the running prefix conditioned to unit mass
      }
    }
  });
  return ens;
}

inline double tv_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw StructuralError("distribution size mismatch");
  return 0.5 * (p - q).cwiseAbs().sum();
}

inline long long flat_index(const Eigen::Ref<const Eigen::Matrix<int, 1, Eigen::Dynamic>>& idx,
                            const std::vector<int>& dims) {
  long long f = 0;
  for (std::size_t k = 0; k < dims.size(); ++k) f = f * dims[k] + idx(static_cast<int>(k));
  return f;
}

// normalized histogram of an index ensemble over the full product grid
inline Eigen::VectorXd empirical_pmf(const DiscreteDeltaEnsemble& ens) {
  long long total = 1;
  for (int n : ens.dims) total *= n;
  if (total > (1LL << 24)) throw StructuralError("grid too large to histogram");
  Eigen::VectorXd h = Eigen::VectorXd::Zero(total);
  for (long long i = 0; i < ens.count(); ++i) h(flat_index(ens.idx.row(i), ens.dims)) += 1.0;
  return h / static_cast<double>(ens.count());
}

// i.i.d. normal cloud, one column per mode
inline Eigen::MatrixXd sample_gaussian_cloud(long long N, int d, double mean, double stddev,
                                             std::uint64_t seed, int nthreads = 1) {
  Eigen::MatrixXd pts(N, d);
  parallel_chunks(N, nthreads, [&](long long lo, long long hi, int) {
    for (long long i = lo; i < hi; ++i) {
      RngStream rng(mix_seed(seed, 0xc10d, i));
      for (int k = 0; k < d; ++k) pts(i, k) = mean + stddev * rng.normal();
    }
  });
  return pts;
}

}  // namespace ttv
