#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <vector>

#include "ttevolve/mpo.hpp"
#include "ttevolve/oracle.hpp"
#include "ttevolve/tt.hpp"

namespace ttest {

// visit every index tuple of the grid, mode 0 slowest
template <class Fn>
void for_each_index(const std::vector<int>& dims, Fn&& fn) {
  std::vector<int> idx(dims.size(), 0);
  while (true) {
    fn(idx);
    int k = static_cast<int>(dims.size()) - 1;
    while (k >= 0 && ++idx[k] == dims[k]) idx[k--] = 0;
    if (k < 0) return;
  }
}

inline long long flat(const std::vector<int>& idx, const std::vector<int>& dims) {
  long long f = 0;
  for (std::size_t k = 0; k < dims.size(); ++k) f = f * dims[k] + idx[k];
  return f;
}

// sup |a - b| / max(sup |b|, floor)
template <class T>
double rel_sup_err(const ttv::Vec<T>& a, const ttv::Vec<T>& b, double floor = 1e-300) {
  double scale = floor;
  for (Eigen::Index i = 0; i < b.size(); ++i) scale = std::max(scale, std::abs(b(i)));
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

template <class T>
double dense_mismatch(const ttv::TensorTrain<T>& tt, const ttv::Vec<T>& ref) {
  return rel_sup_err(ttv::densify(tt).v, ref);
}

template <class T>
T rand_scalar(ttv::RngStream& rng) {
  if constexpr (std::is_same_v<T, ttv::cplx>)
    return ttv::cplx(rng.normal(), rng.normal());
  else
    return rng.normal();
}

template <class T>
ttv::Vec<T> rand_vec(int n, ttv::RngStream& rng) {
  ttv::Vec<T> v(n);
  for (int i = 0; i < n; ++i) v(i) = rand_scalar<T>(rng);
  return v;
}

// dense weighted partial sum over the listed modes (weights default to ones)
template <class T>
ttv::DenseState<T> dense_marginalize(const ttv::DenseState<T>& in, const std::vector<int>& modes,
                                     const std::vector<Eigen::VectorXd>& weights = {}) {
  std::vector<bool> drop(in.dims.size(), false);
  std::vector<const Eigen::VectorXd*> w(in.dims.size(), nullptr);
  for (std::size_t i = 0; i < modes.size(); ++i) {
    drop[modes[i]] = true;
    if (!weights.empty()) w[modes[i]] = &weights[i];
  }
  std::vector<int> odims;
  for (std::size_t k = 0; k < in.dims.size(); ++k)
    if (!drop[k]) odims.push_back(in.dims[k]);
  long long ototal = 1;
  for (int n : odims) ototal *= n;
  ttv::DenseState<T> out;
  out.dims = odims;
  out.v = ttv::Vec<T>::Zero(std::max<long long>(ototal, 1));
  std::vector<int> oidx;
  for_each_index(in.dims, [&](const std::vector<int>& idx) {
    double wt = 1;
    oidx.clear();
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (drop[k])
        wt *= w[k] ? (*w[k])(idx[k]) : 1.0;
      else
        oidx.push_back(idx[k]);
    }
    out.v(flat(oidx, odims)) += wt * in.v(flat(idx, in.dims));
  });
  return out;
}

template <class T>
T mpo_entry(const ttv::MatrixProductOperator<T>& op, const std::vector<int>& out,
            const std::vector<int>& in) {
  ttv::Mat<T> v = ttv::Mat<T>::Ones(1, 1);
  for (int k = 0; k < op.order(); ++k) v = ttv::Mat<T>(v * op.core(k).w[out[k]][in[k]]);
  return v(0, 0);
}

template <class T>
ttv::Vec<T> dense_mpo_apply(const ttv::MatrixProductOperator<T>& op, const ttv::DenseState<T>& v) {
  const auto dims = op.dims_out();
  long long total = 1;
  for (int n : dims) total *= n;
  ttv::Vec<T> y = ttv::Vec<T>::Zero(total);
  for_each_index(dims, [&](const std::vector<int>& xo) {
    T acc{};
    for_each_index(op.dims_in(), [&](const std::vector<int>& xi) {
      acc += mpo_entry(op, xo, xi) * v.v(flat(xi, v.dims));
    });
    y(flat(xo, dims)) = acc;
  });
  return y;
}

template <class T>
ttv::MatrixProductOperator<T> random_mpo(const std::vector<int>& dims, int rank,
                                         ttv::RngStream& rng) {
  std::vector<ttv::MpoCore<T>> cores;
  cores.reserve(dims.size());
  for (std::size_t k = 0; k < dims.size(); ++k) {
    int r0 = (k == 0) ? 1 : rank;
    int r1 = (k + 1 == dims.size()) ? 1 : rank;
    ttv::MpoCore<T> c(r0, dims[k], dims[k], r1);
    for (auto& row : c.w)
      for (auto& m : row)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
          for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rand_scalar<T>(rng);
    cores.push_back(std::move(c));
  }
  return ttv::MatrixProductOperator<T>(std::move(cores));
}

// scratch path under the ctest working directory
inline std::string tmp_path(const std::string& name) { return "ttv_test_" + name; }

}  // namespace ttest
