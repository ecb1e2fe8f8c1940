#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <utility>
#include <vector>

#include "ttevolve/common.hpp"

namespace ttv {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
using cplx = std::complex<double>;

namespace detail {
inline double abs2(double x) { return x * x; }
inline double abs2(const cplx& x) { return std::norm(x); }
}  // namespace detail

// One 3-way core, stored as one bond matrix per mode value:
// slices[x] has shape (r0 x r1).
template <class T>
struct TTCore {
  std::vector<Mat<T>> slices;

  TTCore() = default;
  TTCore(int r0, int n, int r1) : slices(n, Mat<T>::Zero(r0, r1)) {
    if (r0 < 1 || n < 1 || r1 < 1) throw StructuralError("TTCore: extents must be >= 1");
  }
  int r0() const { return static_cast<int>(slices.front().rows()); }
  int n() const { return static_cast<int>(slices.size()); }
  int r1() const { return static_cast<int>(slices.front().cols()); }
};

// Tensor train: u(x_1..x_d) = G_1(x_1) G_2(x_2) ... G_d(x_d), boundary ranks 1.
// A zero-order train degenerates to a plain scalar (the result of
// marginalizing every mode).
template <class T>
class TensorTrain {
 public:
  TensorTrain() = default;
  explicit TensorTrain(std::vector<TTCore<T>> cores) : cores_(std::move(cores)) { validate(); }

  static TensorTrain scalar(T value) {
    TensorTrain t;
    t.scalar_ = value;
    return t;
  }

  int order() const { return static_cast<int>(cores_.size()); }
  std::vector<int> dims() const {
    std::vector<int> d(cores_.size());
    for (std::size_t k = 0; k < cores_.size(); ++k) d[k] = cores_[k].n();
    return d;
  }
  // d+1 entries, boundary ranks included.
  std::vector<int> ranks() const {
    std::vector<int> r(cores_.size() + 1, 1);
    for (std::size_t k = 0; k < cores_.size(); ++k) r[k] = cores_[k].r0();
    if (!cores_.empty()) r[cores_.size()] = cores_.back().r1();
    return r;
  }
  int max_rank() const {
    int m = 1;
    for (auto const& c : cores_) m = std::max(m, c.r1());
    return m;
  }
  const TTCore<T>& core(int k) const { return cores_.at(k); }
  TTCore<T>& core(int k) { return cores_.at(k); }
  const std::vector<TTCore<T>>& cores() const { return cores_; }
  std::vector<TTCore<T>>& cores() { return cores_; }

  // Only meaningful for order-0 trains.
  T value() const {
    if (!cores_.empty()) throw StructuralError("TensorTrain::value: train is not order 0");
    return scalar_;
  }

 private:
  void validate() const {
    if (cores_.empty()) throw StructuralError("TensorTrain: empty core list; use scalar()");
    if (cores_.front().r0() != 1 || cores_.back().r1() != 1)
      throw StructuralError("TensorTrain: boundary ranks must be 1");
    for (std::size_t k = 0; k + 1 < cores_.size(); ++k)
      if (cores_[k].r1() != cores_[k + 1].r0())
        throw StructuralError("TensorTrain: rank mismatch between cores " +
                              std::to_string(k) + " and " + std::to_string(k + 1));
  }

  std::vector<TTCore<T>> cores_;
  T scalar_{1};
};

using TensorTrainR = TensorTrain<double>;
using TensorTrainC = TensorTrain<cplx>;

// ---------------------------------------------------------------------------
// construction helpers

template <class T>
TensorTrain<T> random_tt(const std::vector<int>& dims, const std::vector<int>& ranks,
                         RngStream& rng) {
  if (dims.empty()) throw StructuralError("random_tt: no modes");
  if (ranks.size() != dims.size() + 1) throw StructuralError("random_tt: need d+1 ranks");
  std::vector<TTCore<T>> cores;
  cores.reserve(dims.size());
  for (std::size_t k = 0; k < dims.size(); ++k) {
    TTCore<T> c(ranks[k], dims[k], ranks[k + 1]);
    for (auto& s : c.slices)
      for (Eigen::Index j = 0; j < s.cols(); ++j)
        for (Eigen::Index i = 0; i < s.rows(); ++i) {
          if constexpr (std::is_same_v<T, cplx>)
            s(i, j) = cplx(rng.normal(), rng.normal());
          else
            s(i, j) = rng.normal();
        }
    cores.push_back(std::move(c));
  }
  return TensorTrain<T>(std::move(cores));
}

template <class T>
TensorTrain<T> random_tt(const std::vector<int>& dims, int rank, RngStream& rng) {
  std::vector<int> ranks(dims.size() + 1, rank);
  ranks.front() = ranks.back() = 1;
  // interior ranks cannot exceed what the mode sizes allow
  long prod = 1;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    prod = std::min<long>(prod * dims[k], 1 << 20);
    ranks[k + 1] = static_cast<int>(std::min<long>(ranks[k + 1], prod));
  }
  prod = 1;
  for (std::size_t k = dims.size(); k-- > 1;) {
    prod = std::min<long>(prod * dims[k], 1 << 20);
    ranks[k] = static_cast<int>(std::min<long>(ranks[k], prod));
  }
  return random_tt<T>(dims, ranks, rng);
}

// rank-1 train from per-mode factor vectors
template <class T>
TensorTrain<T> product_tt(const std::vector<Vec<T>>& factors) {
  std::vector<TTCore<T>> cores;
  cores.reserve(factors.size());
  for (auto const& f : factors) {
    TTCore<T> c(1, static_cast<int>(f.size()), 1);
    for (int x = 0; x < c.n(); ++x) c.slices[x](0, 0) = f[x];
    cores.push_back(std::move(c));
  }
  return TensorTrain<T>(std::move(cores));
}

template <class T>
TensorTrain<T> constant_tt(const std::vector<int>& dims, T fill) {
  std::vector<Vec<T>> f;
  f.reserve(dims.size());
  for (std::size_t k = 0; k < dims.size(); ++k)
    f.push_back(Vec<T>::Constant(dims[k], k == 0 ? fill : T(1)));
  return product_tt<T>(f);
}

// ---------------------------------------------------------------------------
// algebra

template <class T>
T tt_eval(const TensorTrain<T>& tt, const std::vector<int>& idx) {
  if (static_cast<int>(idx.size()) != tt.order())
    throw StructuralError("tt_eval: index tuple length != order");
  if (tt.order() == 0) return tt.value();
  Mat<T> v;
  for (int k = 0; k < tt.order(); ++k) {
    int x = idx[k];
    if (x < 0 || x >= tt.core(k).n()) throw StructuralError("tt_eval: index out of range");
    const Mat<T>& s = tt.core(k).slices[x];
    v = (k == 0) ? s : Mat<T>(v * s);
  }
  return v(0, 0);
}

template <class T>
TensorTrain<T> tt_scale(const TensorTrain<T>& tt, T s) {
  if (tt.order() == 0) return TensorTrain<T>::scalar(tt.value() * s);
  auto cores = tt.cores();
  for (auto& sl : cores[0].slices) sl *= s;
  return TensorTrain<T>(std::move(cores));
}

template <class T>
void check_same_dims(const TensorTrain<T>& a, const TensorTrain<T>& b, const char* who) {
  if (a.dims() != b.dims()) throw StructuralError(std::string(who) + ": dims mismatch");
}

// Block-concatenation sum: interior ranks add, values add pointwise.
template <class T>
TensorTrain<T> tt_add(const TensorTrain<T>& a, const TensorTrain<T>& b) {
  check_same_dims(a, b, "tt_add");
  int d = a.order();
  if (d == 0) return TensorTrain<T>::scalar(a.value() + b.value());
  std::vector<TTCore<T>> cores;
  cores.reserve(d);
  for (int k = 0; k < d; ++k) {
    const auto& ca = a.core(k);
    const auto& cb = b.core(k);
    int r0 = (k == 0) ? 1 : ca.r0() + cb.r0();
    int r1 = (k == d - 1) ? 1 : ca.r1() + cb.r1();
    TTCore<T> c(r0, ca.n(), r1);
    for (int x = 0; x < ca.n(); ++x) {
      c.slices[x].setZero();
      c.slices[x].block(0, 0, ca.r0(), ca.r1()) = ca.slices[x];
      c.slices[x].block(r0 - cb.r0(), r1 - cb.r1(), cb.r0(), cb.r1()) = cb.slices[x];
    }
    cores.push_back(std::move(c));
  }
  return TensorTrain<T>(std::move(cores));
}

// Pointwise product: Kronecker product per slice, ranks multiply.
template <class T>
TensorTrain<T> tt_hadamard(const TensorTrain<T>& a, const TensorTrain<T>& b) {
  check_same_dims(a, b, "tt_hadamard");
  int d = a.order();
  if (d == 0) return TensorTrain<T>::scalar(a.value() * b.value());
  std::vector<TTCore<T>> cores;
  cores.reserve(d);
  for (int k = 0; k < d; ++k) {
    const auto& ca = a.core(k);
    const auto& cb = b.core(k);
    TTCore<T> c(ca.r0() * cb.r0(), ca.n(), ca.r1() * cb.r1());
    for (int x = 0; x < ca.n(); ++x)
      for (int i = 0; i < ca.r0(); ++i)
        for (int j = 0; j < ca.r1(); ++j)
          c.slices[x].block(i * cb.r0(), j * cb.r1(), cb.r0(), cb.r1()) =
              ca.slices[x](i, j) * cb.slices[x];
    cores.push_back(std::move(c));
  }
  return TensorTrain<T>(std::move(cores));
}

// Contract out the listed modes with per-mode weights (default all-ones).
// Each contracted core becomes a bond matrix absorbed into the nearest
// surviving neighbor; contracting everything leaves an order-0 scalar train.
template <class T>
TensorTrain<T> tt_marginalize(const TensorTrain<T>& tt, const std::vector<int>& modes,
                              const std::vector<Eigen::VectorXd>& weights = {}) {
  int d = tt.order();
  if (!weights.empty() && weights.size() != modes.size())
    throw StructuralError("tt_marginalize: weights count != modes count");
  std::vector<const Eigen::VectorXd*> w(d, nullptr);
  std::vector<bool> drop(d, false);
  static const Eigen::VectorXd kEmpty;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    int m = modes[i];
    if (m < 0 || m >= d) throw StructuralError("tt_marginalize: mode out of range");
    if (drop[m]) throw StructuralError("tt_marginalize: duplicate mode");
    drop[m] = true;
    if (!weights.empty()) {
      if (weights[i].size() != tt.core(m).n())
        throw StructuralError("tt_marginalize: weight length != mode size");
      w[m] = &weights[i];
    }
  }
  // contracted weight matrix per dropped mode
  std::vector<TTCore<T>> out;
  Mat<T> carry;  // pending bond matrix to absorb into the next surviving core
  bool have_carry = false;
  for (int k = 0; k < d; ++k) {
    const auto& c = tt.core(k);
    if (drop[k]) {
      Mat<T> m = Mat<T>::Zero(c.r0(), c.r1());
      for (int x = 0; x < c.n(); ++x) m += (w[k] ? (*w[k])(x) : 1.0) * c.slices[x];
      carry = have_carry ? Mat<T>(carry * m) : m;
      have_carry = true;
    } else {
      TTCore<T> nc = c;
      if (have_carry) {
        for (auto& s : nc.slices) s = carry * s;
        have_carry = false;
      }
      out.push_back(std::move(nc));
    }
  }
  if (out.empty()) return TensorTrain<T>::scalar(carry(0, 0));
  if (have_carry)  // trailing dropped modes fold into the last surviving core
    for (auto& s : out.back().slices) s = s * carry;
  return TensorTrain<T>(std::move(out));
}

// <a, b> = sum_x conj(a(x)) b(x), contracted left to right.
template <class T>
T tt_inner(const TensorTrain<T>& a, const TensorTrain<T>& b) {
  check_same_dims(a, b, "tt_inner");
  if (a.order() == 0) {
    if constexpr (std::is_same_v<T, cplx>)
      return std::conj(a.value()) * b.value();
    else
      return a.value() * b.value();
  }
  Mat<T> t = Mat<T>::Ones(1, 1);  // (rank_a x rank_b) transfer matrix
  for (int k = 0; k < a.order(); ++k) {
    const auto& ca = a.core(k);
    const auto& cb = b.core(k);
    Mat<T> nt = Mat<T>::Zero(ca.r1(), cb.r1());
    for (int x = 0; x < ca.n(); ++x) nt.noalias() += ca.slices[x].adjoint() * t * cb.slices[x];
    t = std::move(nt);
  }
  return t(0, 0);
}

// 2-norm sqrt(sum |u(x)|^2) via the inner-product contraction.
template <class T>
double tt_norm2(const TensorTrain<T>& tt) {
  if (tt.order() == 0) return std::sqrt(detail::abs2(tt.value()));
  double v = std::real(tt_inner(tt, tt));
  return std::sqrt(std::max(0.0, v));
}

namespace detail {

// (r0 x n*r1) unfolding, columns grouped by mode value: col = x*r1 + j
template <class T>
Mat<T> right_unfold(const TTCore<T>& c) {
  Mat<T> m(c.r0(), static_cast<Eigen::Index>(c.n()) * c.r1());
  for (int x = 0; x < c.n(); ++x) m.middleCols(static_cast<Eigen::Index>(x) * c.r1(), c.r1()) = c.slices[x];
  return m;
}

// (r0*n x r1) unfolding, rows grouped by mode value: row = x*r0 + i
template <class T>
Mat<T> left_unfold(const TTCore<T>& c) {
  Mat<T> m(static_cast<Eigen::Index>(c.n()) * c.r0(), c.r1());
  for (int x = 0; x < c.n(); ++x) m.middleRows(static_cast<Eigen::Index>(x) * c.r0(), c.r0()) = c.slices[x];
  return m;
}

template <class T>
TTCore<T> fold_right(const Mat<T>& m, int n, int r1) {
  TTCore<T> c(static_cast<int>(m.rows()), n, r1);
  for (int x = 0; x < n; ++x) c.slices[x] = m.middleCols(static_cast<Eigen::Index>(x) * r1, r1);
  return c;
}

template <class T>
TTCore<T> fold_left(const Mat<T>& m, int r0, int n) {
  TTCore<T> c(r0, n, static_cast<int>(m.cols()));
  for (int x = 0; x < n; ++x) c.slices[x] = m.middleRows(static_cast<Eigen::Index>(x) * r0, r0);
  return c;
}

// Thin SVD; divide-and-conquer for anything beyond tiny matrices.
template <class T>
void thin_svd(const Mat<T>& m, Mat<T>& u, Eigen::VectorXd& s, Mat<T>& v) {
  if (std::min(m.rows(), m.cols()) <= 16) {
    Eigen::JacobiSVD<Mat<T>> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    u = svd.matrixU();
    s = svd.singularValues();
    v = svd.matrixV();
  } else {
    Eigen::BDCSVD<Mat<T>> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    u = svd.matrixU();
    s = svd.singularValues();
    v = svd.matrixV();
  }
}

}  // namespace detail

// TT rounding: right-to-left orthogonalization sweep, then left-to-right
// truncated SVD with the 2-norm error budget tol*||tt|| split evenly across
// the d-1 bonds. max_rank additionally caps every bond when nonnegative.
template <class T>
TensorTrain<T> tt_round(const TensorTrain<T>& tt, double tol, int max_rank = -1) {
  if (tol < 0) throw StructuralError("tt_round: tol must be >= 0");
  int d = tt.order();
  if (d <= 1) return tt;
  auto cores = tt.cores();

  // right-to-left: make every core row-orthonormal in its right unfolding
  for (int k = d - 1; k > 0; --k) {
    Mat<T> m = detail::right_unfold(cores[k]);
    // LQ via QR of the adjoint: m = L Q with Q having orthonormal rows
    Eigen::HouseholderQR<Mat<T>> qr(m.adjoint());
    Eigen::Index rmin = std::min(m.rows(), m.cols());
    Mat<T> q = qr.householderQ() * Mat<T>::Identity(m.cols(), rmin);
    Mat<T> l = Mat<T>(qr.matrixQR().topRows(rmin).template triangularView<Eigen::Upper>()).adjoint();
    cores[k] = detail::fold_right(Mat<T>(q.adjoint()), cores[k].n(), cores[k].r1());
    for (auto& s : cores[k - 1].slices) s = s * l;
  }

  // after the sweep the whole 2-norm sits in core 0
  double nrm = 0;
  for (auto const& s : cores[0].slices) nrm += s.squaredNorm();
  nrm = std::sqrt(nrm);
  double budget = (nrm == 0.0) ? 0.0 : tol * nrm / std::sqrt(static_cast<double>(d - 1));

  for (int k = 0; k < d - 1; ++k) {
    Mat<T> m = detail::left_unfold(cores[k]);
    Mat<T> mu, mv;
    Eigen::VectorXd sv;
    detail::thin_svd(m, mu, sv, mv);
    int r = static_cast<int>(sv.size());
    double tail = 0;
    while (r > 1) {
      double cand = tail + sv(r - 1) * sv(r - 1);
      if (std::sqrt(cand) > budget) break;
      tail = cand;
      --r;
    }
    if (max_rank >= 1) r = std::min(r, max_rank);
    Mat<T> sv_vh = sv.head(r).template cast<T>().asDiagonal() * mv.leftCols(r).adjoint();
    cores[k] = detail::fold_left(Mat<T>(mu.leftCols(r)), cores[k].r0(), cores[k].n());
    for (auto& s : cores[k + 1].slices) s = sv_vh * s;
  }
  return TensorTrain<T>(std::move(cores));
}

}  // namespace ttv
