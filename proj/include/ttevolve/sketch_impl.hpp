#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <string>
#include <vector>

#include "ttevolve/common.hpp"
#include "ttevolve/serialize.hpp"

namespace ttv {

inline SketchFamily SketchFamily::random(const std::vector<int>& dims, int size,
                                         std::uint64_t seed) {
  if (size < 1) throw StructuralError("sketch size must be positive");
  if (dims.size() < 2) throw StructuralError("sketch needs at least two modes");
  SketchFamily s;
  s.kind_ = SketchKind::RandomTensor;
  s.d_ = static_cast<int>(dims.size());
  s.size_ = size;
  RngStream left_rng(mix_seed(seed, 0x5137, 0));
  RngStream right_rng(mix_seed(seed, 0x5137, 1));
  for (int k = 0; k < s.d_; ++k) {
    Eigen::MatrixXd L(size, dims[k]), R(size, dims[k]);
    for (int i = 0; i < size; ++i)
      for (int x = 0; x < dims[k]; ++x) L(i, x) = left_rng.normal();
    for (int i = 0; i < size; ++i)
      for (int x = 0; x < dims[k]; ++x) R(i, x) = right_rng.normal();
    s.left_.push_back(std::move(L));
    s.right_.push_back(std::move(R));
  }
  return s;
}

inline SketchFamily SketchFamily::ones(const std::vector<int>& dims, int size) {
  std::vector<Eigen::MatrixXd> left, right;
  for (int n : dims) {
    left.push_back(Eigen::MatrixXd::Ones(size, n));
    right.push_back(Eigen::MatrixXd::Ones(size, n));
  }
  return from_factors(std::move(left), std::move(right));
}

inline SketchFamily SketchFamily::from_factors(std::vector<Eigen::MatrixXd> left,
                                               std::vector<Eigen::MatrixXd> right) {
  if (left.size() != right.size() || left.size() < 2)
    throw StructuralError("sketch factor lists must match and cover >= 2 modes");
  SketchFamily s;
  s.kind_ = SketchKind::RandomTensor;
  s.d_ = static_cast<int>(left.size());
  s.size_ = static_cast<int>(left.front().rows());
  for (const auto& m : left)
    if (m.rows() != s.size_) throw StructuralError("inconsistent sketch factor row counts");
  for (const auto& m : right)
    if (m.rows() != s.size_) throw StructuralError("inconsistent sketch factor row counts");
  s.left_ = std::move(left);
  s.right_ = std::move(right);
  return s;
}

inline SketchFamily SketchFamily::cluster(const UnivariateBasis& basis, int c, int d) {
  if (c != 1 && c != 2) throw StructuralError("cluster size must be 1 or 2");
  if (d < 2) throw StructuralError("sketch needs at least two modes");
  SketchFamily s;
  s.kind_ = SketchKind::ClusterBasis;
  s.d_ = d;
  s.c_ = c;
  s.basis_ = &basis;
  return s;
}

namespace detail {

inline long long binom(int m, int c) {
  if (c < 0 || c > m) return 0;
  long long r = 1;
  for (int j = 1; j <= c; ++j) r = r * (m - c + j) / j;
  return r;
}

// cluster rows over a contiguous mode window [lo, lo+m): all c-subsets of
// modes, each mode paired with one of n basis functions; subsets ordered
// lexicographically, function indices fastest. Windows narrower than c use
// the full window so boundary-adjacent bonds still get usable rows.
struct ClusterRows {
  std::vector<std::vector<std::pair<int, int>>> rows;  // (mode, fn) pairs
  ClusterRows(int lo, int m, int c, int n) {
    c = std::min(c, m);
    if (c == 1) {
      for (int k = 0; k < m; ++k)
        for (int b = 0; b < n; ++b) rows.push_back({{lo + k, b}});
    } else if (c == 2) {
      for (int k1 = 0; k1 < m; ++k1)
        for (int k2 = k1 + 1; k2 < m; ++k2)
          for (int b1 = 0; b1 < n; ++b1)
            for (int b2 = 0; b2 < n; ++b2)
              rows.push_back({{lo + k1, b1}, {lo + k2, b2}});
    }
  }
};

}  // namespace detail

inline int SketchFamily::xi_size(int b) const {
  if (b < 0 || b > d_) throw StructuralError("bond index out of range");
  if (b == 0) return 1;
  if (kind_ == SketchKind::RandomTensor) return size_;
  const int ce = std::min(c_, b);
  return static_cast<int>(detail::binom(b, ce) * std::pow(basis_->size(), ce));
}

inline int SketchFamily::gamma_size(int b) const {
  if (b < 0 || b > d_) throw StructuralError("bond index out of range");
  if (b == d_) return 1;
  if (kind_ == SketchKind::RandomTensor) return size_;
  const int ce = std::min(c_, d_ - b);
  return static_cast<int>(detail::binom(d_ - b, ce) * std::pow(basis_->size(), ce));
}

template <class T>
void Moments<T>::merge(const Moments& other) {
  if (pairs.size() != other.pairs.size()) throw StructuralError("moment shard order mismatch");
  if (continuous != other.continuous) throw StructuralError("moment shard family mismatch");
  if (count + other.count == 0) return;
  const double wa = static_cast<double>(count) / (count + other.count);
  const double wb = 1.0 - wa;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    pairs[k].A = wa * pairs[k].A + wb * other.pairs[k].A;
    for (std::size_t x = 0; x < pairs[k].B.size(); ++x)
      pairs[k].B[x] = wa * pairs[k].B[x] + wb * other.pairs[k].B[x];
  }
  count += other.count;
}

namespace detail {

template <class T>
Moments<T> zero_moments(const SketchFamily& sketch, const std::vector<int>& dims) {
  Moments<T> m;
  const int d = sketch.order();
  m.pairs.resize(d);
  for (int k = 0; k < d; ++k) {
    m.pairs[k].A = (k == 0) ? Mat<T>::Ones(1, 1)
                            : Mat<T>::Zero(sketch.xi_size(k), sketch.gamma_size(k));
    m.pairs[k].B.assign(dims[k], Mat<T>::Zero(sketch.xi_size(k), sketch.gamma_size(k + 1)));
  }
  if (sketch.kind() == SketchKind::ClusterBasis) {
    m.continuous = true;
    m.basis = sketch.basis();
  }
  return m;
}

// Per-chunk state for the scaled-train ensemble. Rows of every bond matrix
// are (xi-or-gamma row index major, particle minor): row = j * C + i, so a
// fixed sketch row occupies a contiguous particle block and the bondwise
// contraction A = sum_i P_row(i) . Q_row(i)^T becomes one GEMM after
// regrouping columns.
template <class T>
void accumulate_scaled_chunk(const ScaledTTEnsemble<T>& ens, const SketchFamily& sketch,
                             long long i0, long long i1, Moments<T>& out) {
  const TensorTrain<T>& u = *ens.base;
  const int d = u.order();
  const int C = static_cast<int>(i1 - i0);

  auto rows_of = [&](int b, bool prefix) { return prefix ? sketch.xi_size(b) : sketch.gamma_size(b); };

  // suffix sweep: Q[b] has gamma_size(b) row blocks, bond dim r_b columns
  std::vector<Mat<T>> Q(d + 1);
  Q[d] = Mat<T>::Ones(C, 1);
  for (int k = d - 1; k >= 0; --k) {
    const auto& core = u.core(k);
    const int n = core.n();
    const int rows = rows_of(k, false) * C;
    Mat<T> next = Mat<T>::Zero(rows, core.r0());
    for (int x = 0; x < n; ++x) {
      Mat<T> V = Q[k + 1] * core.slices[x].transpose();  // (s_{k+1} C x r_k)
      if (k == d - 1) {
        // suffix factor enters here; below the last mode Q[d] had one row block
        for (int g = 0; g < rows_of(k, false); ++g)
          next.middleRows(g * C, C).noalias() +=
              (V.array().colwise() *
               (sketch.right_factor(k)(g, x) * ens.scale[k].col(x).array().segment(i0, C)))
                  .matrix();
      } else {
        for (int g = 0; g < rows_of(k, false); ++g)
          next.middleRows(g * C, C).noalias() +=
              (V.middleRows(g * C, C).array().colwise() *
               (sketch.right_factor(k)(g, x) * ens.scale[k].col(x).array().segment(i0, C)))
                  .matrix();
      }
    }
    Q[k] = std::move(next);
  }

  // prefix sweep, emitting A at each interior bond and B at each mode
  Mat<T> P = Mat<T>::Ones(C, 1);
  Mat<T> regroupL, regroupR;
  for (int k = 0; k < d; ++k) {
    const auto& core = u.core(k);
    const int n = core.n();
    const int p = rows_of(k, true);        // prefix rows at bond k
    const int sR = rows_of(k + 1, false);  // suffix rows at bond k+1
    const int r0 = core.r0(), r1 = core.r1();

    if (k > 0) {  // A_k = mean_i P(.,i,:) . Q[k](.,i,:)^T contracted over (i, r_k)
      const int sA = rows_of(k, false);  // suffix rows at this bond, not the next
      regroupL.resize(p, static_cast<Eigen::Index>(C) * r0);
      regroupR.resize(sA, static_cast<Eigen::Index>(C) * r0);
      for (int j = 0; j < p; ++j)
        for (int rho = 0; rho < r0; ++rho)
          regroupL.block(j, static_cast<Eigen::Index>(rho) * C, 1, C) =
              P.col(rho).segment(static_cast<Eigen::Index>(j) * C, C).transpose();
      for (int j = 0; j < sA; ++j)
        for (int rho = 0; rho < r0; ++rho)
          regroupR.block(j, static_cast<Eigen::Index>(rho) * C, 1, C) =
              Q[k].col(rho).segment(static_cast<Eigen::Index>(j) * C, C).transpose();
      out.pairs[k].A.noalias() += regroupL * regroupR.transpose();
    }

    // W_x = P . core(x), shared by B_k and the prefix update
    std::vector<Mat<T>> W(n);
    for (int x = 0; x < n; ++x) W[x].noalias() = P * core.slices[x];

    regroupR.resize(sR, static_cast<Eigen::Index>(C) * r1);
    for (int j = 0; j < sR; ++j)
      for (int rho = 0; rho < r1; ++rho)
        regroupR.block(j, static_cast<Eigen::Index>(rho) * C, 1, C) =
            Q[k + 1].col(rho).segment(static_cast<Eigen::Index>(j) * C, C).transpose();
    for (int x = 0; x < n; ++x) {
      regroupL.resize(p, static_cast<Eigen::Index>(C) * r1);
      for (int j = 0; j < p; ++j)
        for (int rho = 0; rho < r1; ++rho)
          regroupL.block(j, static_cast<Eigen::Index>(rho) * C, 1, C) =
              (W[x].col(rho).segment(static_cast<Eigen::Index>(j) * C, C).array() *
               ens.scale[k].col(x).segment(i0, C).array())
                  .transpose();
      out.pairs[k].B[x].noalias() += regroupL * regroupR.transpose();
    }

    if (k + 1 < d) {
      const int pNext = rows_of(k + 1, true);
      Mat<T> next = Mat<T>::Zero(static_cast<Eigen::Index>(pNext) * C, r1);
      for (int x = 0; x < n; ++x) {
        const auto scaled = ens.scale[k].col(x).segment(i0, C);
        for (int j = 0; j < pNext; ++j) {
          const T lf = static_cast<T>(sketch.left_factor(k)(j, x));
          const auto block = (k == 0) ? W[x].topRows(C) : W[x].middleRows(static_cast<Eigen::Index>(j) * C, C);
          next.middleRows(static_cast<Eigen::Index>(j) * C, C).noalias() +=
              (block.array().colwise() * (lf * scaled.array())).matrix();
        }
      }
      P = std::move(next);
    }
  }
}

}  // namespace detail

template <class T>
Moments<T> accumulate_moments(const ScaledTTEnsemble<T>& ens, const SketchFamily& sketch,
                              int nthreads) {
  if (!ens.base) throw StructuralError("scaled ensemble has no base train");
  if (sketch.kind() != SketchKind::RandomTensor)
    throw StructuralError("scaled-train moments require a random-tensor sketch");
  const TensorTrain<T>& u = *ens.base;
  if (sketch.order() != u.order()) throw StructuralError("sketch order does not match train");
  std::vector<int> dims = u.dims();
  for (int k = 0; k < u.order(); ++k)
    if (ens.scale[k].cols() != dims[k]) throw StructuralError("scale width does not match mode size");
  const long long N = ens.count();

  // chunk size from a flat memory budget over the Q cache
  const std::vector<int> ranks = u.ranks();
  long long per = 0;
  for (int b = 0; b <= u.order(); ++b) per += sketch.gamma_size(b) * ranks[b];
  long long chunk = std::clamp<long long>((64LL << 20) / (per * static_cast<long long>(sizeof(T)) + 1), 8, 4096);
  chunk = std::min(chunk, N);

  std::vector<std::pair<long long, long long>> spans;
  for (long long i = 0; i < N; i += chunk) spans.push_back({i, std::min(i + chunk, N)});

  std::vector<Moments<T>> shards(std::max(1, nthreads), detail::zero_moments<T>(sketch, dims));
  parallel_chunks(static_cast<long long>(spans.size()), nthreads, [&](long long lo, long long hi, int t) {
    for (long long j = lo; j < hi; ++j)
      detail::accumulate_scaled_chunk(ens, sketch, spans[j].first, spans[j].second, shards[t]);
  });

  Moments<T> total = std::move(shards[0]);
  for (std::size_t t = 1; t < shards.size(); ++t)
    for (std::size_t k = 0; k < total.pairs.size(); ++k) {
      total.pairs[k].A += shards[t].pairs[k].A;
      for (std::size_t x = 0; x < total.pairs[k].B.size(); ++x)
        total.pairs[k].B[x] += shards[t].pairs[k].B[x];
    }
  const double inv = 1.0 / static_cast<double>(N);
  for (int k = 0; k < u.order(); ++k) {
    if (k > 0) total.pairs[k].A *= inv;
    for (auto& b : total.pairs[k].B) b *= inv;
  }
  total.pairs[0].A = Mat<T>::Ones(1, 1);
  total.count = N;
  return total;
}

inline Moments<double> accumulate_moments(const DiscreteDeltaEnsemble& ens,
                                          const SketchFamily& sketch, int nthreads) {
  if (sketch.kind() != SketchKind::RandomTensor)
    throw StructuralError("discrete moments require a random-tensor sketch");
  const int d = sketch.order();
  if (static_cast<int>(ens.dims.size()) != d || ens.idx.cols() != d)
    throw StructuralError("ensemble order does not match sketch");
  const long long N = ens.count();
  if (N == 0) throw StructuralError("empty ensemble");
  const int s = sketch.sketch_size();

  std::vector<Moments<double>> shards(std::max(1, nthreads),
                                      detail::zero_moments<double>(sketch, ens.dims));
  parallel_chunks(N, nthreads, [&](long long lo, long long hi, int t) {
    const int C = static_cast<int>(hi - lo);
    Moments<double>& out = shards[t];
    // P[k](i, xi): prefix row values through mode k-1; likewise Q from the right
    std::vector<Eigen::MatrixXd> Q(d + 1);
    Q[d] = Eigen::MatrixXd::Ones(C, 1);
    for (int k = d - 1; k >= 0; --k) {
      Q[k].resize(C, sketch.gamma_size(k));
      for (int i = 0; i < C; ++i) {
        const int x = ens.idx(lo + i, k);
        for (int g = 0; g < sketch.gamma_size(k); ++g)
          Q[k](i, g) = sketch.right_factor(k)(g, x) * Q[k + 1](i, k == d - 1 ? 0 : g);
      }
    }
    Eigen::MatrixXd P = Eigen::MatrixXd::Ones(C, 1);
    std::vector<std::vector<int>> byval;
    for (int k = 0; k < d; ++k) {
      if (k > 0) out.pairs[k].A.noalias() += P.transpose() * Q[k];
      byval.assign(ens.dims[k], {});
      for (int i = 0; i < C; ++i) byval[ens.idx(lo + i, k)].push_back(i);
      for (int x = 0; x < ens.dims[k]; ++x) {
        if (byval[x].empty()) continue;
        Eigen::MatrixXd Psub(byval[x].size(), P.cols()), Qsub(byval[x].size(), Q[k + 1].cols());
        for (std::size_t j = 0; j < byval[x].size(); ++j) {
          Psub.row(j) = P.row(byval[x][j]);
          Qsub.row(j) = Q[k + 1].row(byval[x][j]);
        }
        out.pairs[k].B[x].noalias() += Psub.transpose() * Qsub;
      }
      if (k + 1 < d) {
        Eigen::MatrixXd next(C, s);
        for (int i = 0; i < C; ++i) {
          const int x = ens.idx(lo + i, k);
          for (int j = 0; j < s; ++j)
            next(i, j) = sketch.left_factor(k)(j, x) * P(i, k == 0 ? 0 : j);
        }
        P = std::move(next);
      }
    }
  });

  Moments<double> total = std::move(shards[0]);
  for (std::size_t t = 1; t < shards.size(); ++t)
    for (int k = 0; k < d; ++k) {
      total.pairs[k].A += shards[t].pairs[k].A;
      for (int x = 0; x < ens.dims[k]; ++x) total.pairs[k].B[x] += shards[t].pairs[k].B[x];
    }
  const double inv = 1.0 / static_cast<double>(N);
  for (int k = 0; k < d; ++k) {
    if (k > 0) total.pairs[k].A *= inv;
    for (auto& b : total.pairs[k].B) b *= inv;
  }
  total.pairs[0].A = Eigen::MatrixXd::Ones(1, 1);
  total.count = N;
  return total;
}

namespace detail {

// feature matrix F(i, k*n + b) = b-th basis function at particle i's mode-k
// coordinate; all cluster moments are products of its columns
inline Eigen::MatrixXd feature_matrix(const DeltaEnsemble& ens, const UnivariateBasis& basis,
                                      long long lo, long long hi) {
  const int d = static_cast<int>(ens.points.cols());
  const int n = basis.size();
  Eigen::MatrixXd F(hi - lo, static_cast<Eigen::Index>(d) * n);
  for (long long i = lo; i < hi; ++i)
    for (int k = 0; k < d; ++k)
      for (int b = 0; b < n; ++b) F(i - lo, static_cast<Eigen::Index>(k) * n + b) = basis.eval(b, ens.points(i, k));
  return F;
}

inline Eigen::MatrixXd cluster_row_values(const Eigen::MatrixXd& F, const ClusterRows& rows,
                                          int n) {
  Eigen::MatrixXd M(F.rows(), rows.rows.size());
  for (std::size_t j = 0; j < rows.rows.size(); ++j) {
    Eigen::VectorXd col = Eigen::VectorXd::Ones(F.rows());
    for (auto [mode, fn] : rows.rows[j])
      col.array() *= F.col(static_cast<Eigen::Index>(mode) * n + fn).array();
    M.col(j) = col;
  }
  return M;
}

}  // namespace detail

inline Moments<double> accumulate_moments(const DeltaEnsemble& ens, const SketchFamily& sketch,
                                          int nthreads) {
  if (sketch.kind() != SketchKind::ClusterBasis)
    throw StructuralError("continuous moments require a cluster-basis sketch");
  const int d = sketch.order();
  if (ens.points.cols() != d) throw StructuralError("ensemble order does not match sketch");
  const long long N = ens.count();
  if (N == 0) throw StructuralError("empty ensemble");
  const UnivariateBasis& basis = *sketch.basis();
  const int n = basis.size();
  const int c = sketch.cluster_size();
  std::vector<int> dims(d, n);

  const long long chunk = std::clamp<long long>((128LL << 20) / (static_cast<long long>(d) * n * 8 * 6 + 1), 64, 8192);
  std::vector<std::pair<long long, long long>> spans;
  for (long long i = 0; i < N; i += chunk) spans.push_back({i, std::min(i + chunk, N)});

  std::vector<Moments<double>> shards(std::max(1, nthreads),
                                      detail::zero_moments<double>(sketch, dims));
  parallel_chunks(static_cast<long long>(spans.size()), nthreads, [&](long long lo, long long hi, int t) {
    Moments<double>& out = shards[t];
    for (long long j = lo; j < hi; ++j) {
      const auto [i0, i1] = spans[j];
      Eigen::MatrixXd F = detail::feature_matrix(ens, basis, i0, i1);
      if (c == 1) {
        // one Gram accumulates every bond's A; B via column-scaled GEMMs
        Eigen::MatrixXd G = F.transpose() * F;  // (dn x dn)
        for (int k = 1; k < d; ++k)
          out.pairs[k].A.noalias() +=
              G.topLeftCorner(static_cast<Eigen::Index>(k) * n, G.cols())
                  .rightCols(static_cast<Eigen::Index>(d - k) * n);
        for (int k = 0; k < d; ++k) {
          const auto left = F.leftCols(static_cast<Eigen::Index>(k) * n);
          const auto right = F.rightCols(static_cast<Eigen::Index>(d - k - 1) * n);
          for (int m = 0; m < n; ++m) {
            const auto w = F.col(static_cast<Eigen::Index>(k) * n + m);
            if (k == 0)
              out.pairs[k].B[m].noalias() += (w.transpose() * right);
            else if (k == d - 1)
              out.pairs[k].B[m].noalias() += left.transpose() * w;
            else
              out.pairs[k].B[m].noalias() +=
                  left.transpose() * (right.array().colwise() * w.array()).matrix();
          }
        }
      } else {
        for (int k = 0; k < d; ++k) {
          detail::ClusterRows xi(0, k, c, n), gammaNext(k + 1, d - k - 1, c, n);
          Eigen::MatrixXd Lv = k == 0 ? Eigen::MatrixXd::Ones(F.rows(), 1)
                                      : detail::cluster_row_values(F, xi, n);
          Eigen::MatrixXd Rv = k == d - 1 ? Eigen::MatrixXd::Ones(F.rows(), 1)
                                          : detail::cluster_row_values(F, gammaNext, n);
          if (k > 0) {
            detail::ClusterRows gamma(k, d - k, c, n);
            Eigen::MatrixXd Gv = detail::cluster_row_values(F, gamma, n);
            out.pairs[k].A.noalias() += Lv.transpose() * Gv;
          }
          for (int m = 0; m < n; ++m) {
            const auto w = F.col(static_cast<Eigen::Index>(k) * n + m);
            out.pairs[k].B[m].noalias() +=
                Lv.transpose() * (Rv.array().colwise() * w.array()).matrix();
          }
        }
      }
    }
  });

  Moments<double> total = std::move(shards[0]);
  for (std::size_t t = 1; t < shards.size(); ++t)
    for (int k = 0; k < d; ++k) {
      total.pairs[k].A += shards[t].pairs[k].A;
      for (int x = 0; x < n; ++x) total.pairs[k].B[x] += shards[t].pairs[k].B[x];
    }
  const double inv = 1.0 / static_cast<double>(N);
  for (int k = 0; k < d; ++k) {
    if (k > 0) total.pairs[k].A *= inv;
    for (auto& b : total.pairs[k].B) b *= inv;
  }
  total.pairs[0].A = Eigen::MatrixXd::Ones(1, 1);
  total.count = N;
  return total;
}

template <class T>
std::pair<TensorTrain<T>, TrimReport> solve_cores(const Moments<T>& moments,
                                                  double svd_threshold) {
  const int d = moments.order();
  if (d < 2) throw StructuralError("moment solve needs at least two modes");
  TrimReport report;
  report.threshold = svd_threshold;

  // continuous case: undo the basis Gram on the mode index of each B
  auto mode_slices = [&](int k) {
    std::vector<Mat<T>> slices = moments.pairs[k].B;
    if (!moments.continuous) return slices;
    if constexpr (std::is_same_v<T, double>) {
      const int n = static_cast<int>(slices.size());
      Eigen::MatrixXd raw(n, slices[0].size());
      for (int m = 0; m < n; ++m)
        raw.row(m) = Eigen::Map<const Eigen::VectorXd>(slices[m].data(), slices[m].size());
      Eigen::MatrixXd solved = moments.basis->gram_solve(raw);
      for (int m = 0; m < n; ++m)
        Eigen::Map<Eigen::VectorXd>(slices[m].data(), slices[m].size()) = solved.row(m);
      return slices;
    } else {
      throw StructuralError("continuous moments must be real valued");
    }
  };

  // trimmed SVD of each interior A; U,S act on the left bond, V on the right
  std::vector<Mat<T>> Uh(d), V(d);  // Uh[k] = S^-1 U^H at bond k, V[k] at bond k
  for (int k = 1; k < d; ++k) {
    Eigen::JacobiSVD<Mat<T>> svd;
    Eigen::BDCSVD<Mat<T>> bdc;
    const Mat<T>& A = moments.pairs[k].A;
    if (!A.allFinite()) throw NumericalError("non-finite sketch moments at bond " + std::to_string(k));
    Eigen::VectorXd sv;
    Mat<T> u, v;
    if (std::min(A.rows(), A.cols()) <= 16) {
      svd.compute(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
      sv = svd.singularValues();
      u = svd.matrixU();
      v = svd.matrixV();
    } else {
      bdc.compute(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
      sv = bdc.singularValues();
      u = bdc.matrixU();
      v = bdc.matrixV();
    }
    if (sv.size() == 0 || sv(0) <= 0)
      throw NumericalError("sketched bond matrix collapsed to rank zero at bond " +
                           std::to_string(k));
    int r = 0;
    while (r < sv.size() && sv(r) >= svd_threshold * sv(0)) ++r;
    r = std::max(r, 1);
    report.ranks.push_back(r);
    report.discarded.emplace_back(sv.data() + r, sv.data() + sv.size());
    Uh[k] = u.leftCols(r).adjoint();
    for (int j = 0; j < r; ++j) Uh[k].row(j) /= static_cast<T>(sv(j));
    V[k] = v.leftCols(r);
  }

  TensorTrain<T> tt;
  std::vector<TTCore<T>> cores(d);
  for (int k = 0; k < d; ++k) {
    auto slices = mode_slices(k);
    for (auto& s : slices) {
      if (k > 0) s = Uh[k] * s;
      if (k < d - 1) s = s * V[k + 1];
    }
    cores[k].slices = std::move(slices);
  }
  return {TensorTrain<T>(std::move(cores)), report};
}

template <class T>
void dump_moments(const std::string& path, const Moments<T>& moments) {
  std::vector<Mat<T>> arrays;
  for (const auto& p : moments.pairs) {
    arrays.push_back(p.A);
    for (const auto& b : p.B) arrays.push_back(b);
  }
  save_arrays(path, arrays);
}

}  // namespace ttv
