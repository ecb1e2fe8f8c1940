#pragma once

#include "ttevolve/tt.hpp"

namespace ttv {

// One 4-way operator core: w[x][x'] is the (r0 x r1) bond matrix for output
// value x and input value x'.
template <class T>
struct MpoCore {
  std::vector<std::vector<Mat<T>>> w;

  MpoCore() = default;
  MpoCore(int r0, int n_out, int n_in, int r1)
      : w(n_out, std::vector<Mat<T>>(n_in, Mat<T>::Zero(r0, r1))) {
    if (r0 < 1 || n_out < 1 || n_in < 1 || r1 < 1)
      throw StructuralError("MpoCore: extents must be >= 1");
  }
  int r0() const { return static_cast<int>(w.front().front().rows()); }
  int n_out() const { return static_cast<int>(w.size()); }
  int n_in() const { return static_cast<int>(w.front().size()); }
  int r1() const { return static_cast<int>(w.front().front().cols()); }
};

template <class T>
class MatrixProductOperator {
 public:
  MatrixProductOperator() = default;
  explicit MatrixProductOperator(std::vector<MpoCore<T>> cores) : cores_(std::move(cores)) {
    if (cores_.empty()) throw StructuralError("MatrixProductOperator: no cores");
    if (cores_.front().r0() != 1 || cores_.back().r1() != 1)
      throw StructuralError("MatrixProductOperator: boundary ranks must be 1");
    for (std::size_t k = 0; k + 1 < cores_.size(); ++k)
      if (cores_[k].r1() != cores_[k + 1].r0())
        throw StructuralError("MatrixProductOperator: rank mismatch at core " + std::to_string(k));
  }

  int order() const { return static_cast<int>(cores_.size()); }
  const MpoCore<T>& core(int k) const { return cores_.at(k); }
  std::vector<int> dims_in() const {
    std::vector<int> d(cores_.size());
    for (std::size_t k = 0; k < cores_.size(); ++k) d[k] = cores_[k].n_in();
    return d;
  }
  std::vector<int> dims_out() const {
    std::vector<int> d(cores_.size());
    for (std::size_t k = 0; k < cores_.size(); ++k) d[k] = cores_[k].n_out();
    return d;
  }

 private:
  std::vector<MpoCore<T>> cores_;
};

// rank-1 operator acting sitewise: site_ops[k] is the (n_out x n_in) matrix
// applied at mode k.
template <class T>
MatrixProductOperator<T> product_mpo(const std::vector<Mat<T>>& site_ops) {
  std::vector<MpoCore<T>> cores;
  cores.reserve(site_ops.size());
  for (auto const& m : site_ops) {
    MpoCore<T> c(1, static_cast<int>(m.rows()), static_cast<int>(m.cols()), 1);
    for (int x = 0; x < c.n_out(); ++x)
      for (int y = 0; y < c.n_in(); ++y) c.w[x][y](0, 0) = m(x, y);
    cores.push_back(std::move(c));
  }
  return MatrixProductOperator<T>(std::move(cores));
}

template <class T>
MatrixProductOperator<T> identity_mpo(const std::vector<int>& dims) {
  std::vector<Mat<T>> ops;
  ops.reserve(dims.size());
  for (int n : dims) ops.push_back(Mat<T>::Identity(n, n));
  return product_mpo(ops);
}

// (op tt)(x) = sum_{x'} op(x, x') tt(x'); result bond ranks are products.
template <class T>
TensorTrain<T> mpo_apply(const MatrixProductOperator<T>& op, const TensorTrain<T>& tt) {
  if (op.dims_in() != tt.dims()) throw StructuralError("mpo_apply: operator/train dims mismatch");
  int d = tt.order();
  std::vector<TTCore<T>> cores;
  cores.reserve(d);
  for (int k = 0; k < d; ++k) {
    const auto& oc = op.core(k);
    const auto& tc = tt.core(k);
    TTCore<T> c(oc.r0() * tc.r0(), oc.n_out(), oc.r1() * tc.r1());
    for (int x = 0; x < oc.n_out(); ++x) {
      c.slices[x].setZero();
      for (int y = 0; y < oc.n_in(); ++y) {
        const Mat<T>& w = oc.w[x][y];
        if (oc.r0() == 1 && oc.r1() == 1) {
          if (w(0, 0) != T(0)) c.slices[x].noalias() += w(0, 0) * tc.slices[y];
        } else {
          for (int i = 0; i < oc.r0(); ++i)
            for (int j = 0; j < oc.r1(); ++j)
              if (w(i, j) != T(0))
                c.slices[x].block(i * tc.r0(), j * tc.r1(), tc.r0(), tc.r1()).noalias() +=
                    w(i, j) * tc.slices[y];
        }
      }
    }
    cores.push_back(std::move(c));
  }
  return TensorTrain<T>(std::move(cores));
}

}  // namespace ttv
