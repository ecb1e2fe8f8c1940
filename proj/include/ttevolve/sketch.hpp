#pragma once

#include <cstdint>
#include <memory>

#include "ttevolve/basis.hpp"
#include "ttevolve/tt.hpp"

namespace ttv {

enum class SketchKind { RandomTensor, ClusterBasis };

// Separable test functions contracted against the unknown tensor from the
// left (prefix rows Xi_b over modes 0..b-1) and from the right (suffix rows
// Gamma_b over modes b..d-1). Two families:
//  - random-tensor: per-mode i.i.d. standard normal factor rows, the same
//    row count at every bond;
//  - cluster-basis: rows are products of `c` basis functions on `c`
//    distinct modes, enumerated within the prefix/suffix.
class SketchFamily {
 public:
  static SketchFamily random(const std::vector<int>& dims, int size, std::uint64_t seed);
  // test hook: factor entries all one
  static SketchFamily ones(const std::vector<int>& dims, int size = 1);
  static SketchFamily from_factors(std::vector<Eigen::MatrixXd> left,
                                   std::vector<Eigen::MatrixXd> right);
  static SketchFamily cluster(const UnivariateBasis& basis, int c, int d);

  SketchKind kind() const { return kind_; }
  int order() const { return d_; }
  int sketch_size() const { return size_; }  // random kind row count
  int cluster_size() const { return c_; }
  const UnivariateBasis* basis() const { return basis_; }

  // |Xi_b|: prefix rows covering modes 0..b-1 (1 when b == 0)
  int xi_size(int b) const;
  // |Gamma_b|: suffix rows covering modes b..d-1 (1 when b == d)
  int gamma_size(int b) const;

  // random kind factors, (size x n_k)
  const Eigen::MatrixXd& left_factor(int k) const { return left_.at(k); }
  const Eigen::MatrixXd& right_factor(int k) const { return right_.at(k); }

 private:
  SketchFamily() = default;
  SketchKind kind_ = SketchKind::RandomTensor;
  int d_ = 0;
  int size_ = 0;  // random kind
  int c_ = 0;     // cluster kind
  const UnivariateBasis* basis_ = nullptr;
  std::vector<Eigen::MatrixXd> left_, right_;
};

// Empirical sketched moments at one mode: A sits on the mode's left bond,
// B carries the mode index (one bond matrix per mode value). Entries are
// means over the particle ensemble.
template <class T>
struct MomentPair {
  Mat<T> A;                // (|Xi_k| x |Gamma_k|); 1x1 ones at k = 0
  std::vector<Mat<T>> B;   // n_k slices (|Xi_k| x |Gamma_{k+1}|)
};

template <class T>
struct Moments {
  std::vector<MomentPair<T>> pairs;
  long long count = 0;
  bool continuous = false;             // solve in basis-coefficient space
  const UnivariateBasis* basis = nullptr;

  int order() const { return static_cast<int>(pairs.size()); }

  // combine two shards accumulated over disjoint particle sets
  void merge(const Moments& other);
};

struct TrimReport {
  std::vector<int> ranks;                       // kept rank per interior bond
  std::vector<std::vector<double>> discarded;   // singular values dropped per bond
  double threshold = 0;
};

// Particle ensembles ------------------------------------------------------

// continuous points, one row per particle
struct DeltaEnsemble {
  Eigen::MatrixXd points;  // N x d
  long long count() const { return points.rows(); }
};

// discrete index tuples
struct DiscreteDeltaEnsemble {
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> idx;  // N x d
  std::vector<int> dims;
  long long count() const { return idx.rows(); }
};

// N particles sharing one base train, each reweighting mode k's slice x by
// scale[k](i, x); this is how sampled sitewise propagators act on a state
// without materializing N trains.
template <class T>
struct ScaledTTEnsemble {
  const TensorTrain<T>* base = nullptr;
  std::vector<Mat<T>> scale;  // per mode: (N x n_k)
  long long count() const { return scale.empty() ? 1 : scale.front().rows(); }
};

// one particle's train with its scalings folded into the cores
template <class T>
TensorTrain<T> materialize_particle(const ScaledTTEnsemble<T>& ens, long long i) {
  if (!ens.base) throw StructuralError("scaled ensemble has no base train");
  std::vector<TTCore<T>> cores;
  cores.reserve(ens.base->order());
  for (int k = 0; k < ens.base->order(); ++k) {
    TTCore<T> c = ens.base->core(k);
    for (int x = 0; x < c.n(); ++x) c.slices[x] *= ens.scale[k](i, x);
    cores.push_back(std::move(c));
  }
  return TensorTrain<T>(std::move(cores));
}

// an exact train treated as a single-particle ensemble with unit scalings
template <class T>
ScaledTTEnsemble<T> exact_ensemble(const TensorTrain<T>& tt) {
  ScaledTTEnsemble<T> e;
  e.base = &tt;
  e.scale.reserve(tt.order());
  for (int k = 0; k < tt.order(); ++k) e.scale.push_back(Mat<T>::Ones(1, tt.core(k).n()));
  return e;
}

// Moment accumulation ------------------------------------------------------

template <class T>
Moments<T> accumulate_moments(const ScaledTTEnsemble<T>& ens, const SketchFamily& sketch,
                              int nthreads = 1);
Moments<double> accumulate_moments(const DiscreteDeltaEnsemble& ens, const SketchFamily& sketch,
                                   int nthreads = 1);
Moments<double> accumulate_moments(const DeltaEnsemble& ens, const SketchFamily& sketch,
                                   int nthreads = 1);

// Solve the per-bond systems B_k = A_k G_k with a trimmed-SVD pseudo-inverse
// of each A (singular values kept while >= svd_threshold * sigma_max), then
// regroup the projected cores so bond dims equal the kept ranks.
template <class T>
std::pair<TensorTrain<T>, TrimReport> solve_cores(const Moments<T>& moments,
                                                  double svd_threshold);

template <class Ensemble>
auto estimate_tt_from_particles(const Ensemble& ens, const SketchFamily& sketch,
                                double svd_threshold, TrimReport* report = nullptr,
                                int nthreads = 1) {
  auto moments = accumulate_moments(ens, sketch, nthreads);
  auto [tt, trim] = solve_cores(moments, svd_threshold);
  if (report) *report = trim;
  return tt;
}

// debug dump: for each mode, A then the B slices, in container order
template <class T>
void dump_moments(const std::string& path, const Moments<T>& moments);

}  // namespace ttv

#include "ttevolve/sketch_impl.hpp"
