#include "ttevolve/langevin.hpp"

#include <cmath>

#include "ttevolve/oracle.hpp"
#include "ttevolve/sampler.hpp"

namespace ttv {

Potential double_well(int d, double coeff) {
  if (d < 1) throw StructuralError("potential needs at least one mode");
  Potential p;
  p.kind = Potential::Kind::DoubleWell;
  p.d = d;
  p.coeff = coeff;
  return p;
}

Potential ginzburg_landau(int d, double lambda) {
  if (d < 1) throw StructuralError("potential needs at least one mode");
  if (!(lambda > 0)) throw StructuralError("interface strength must be positive");
  Potential p;
  p.kind = Potential::Kind::GinzburgLandau;
  p.d = d;
  p.lambda = lambda;
  return p;
}

Potential custom_potential(int d, std::function<double(const Eigen::RowVectorXd&)> value,
                           std::function<Eigen::RowVectorXd(const Eigen::RowVectorXd&)> grad) {
  if (d < 1) throw StructuralError("potential needs at least one mode");
  if (!value || !grad) throw StructuralError("custom potential needs value and gradient");
  Potential p;
  p.kind = Potential::Kind::Custom;
  p.d = d;
  p.custom_value = std::move(value);
  p.custom_grad = std::move(grad);
  return p;
}

double Potential::value(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (x.size() != d) throw StructuralError("point order does not match potential");
  if (kind == Kind::Custom) return custom_value(x);
  if (kind == Kind::DoubleWell) {
    const double a = x(0) * x(0) - 1.0;
    return a * a + coeff * x.tail(d - 1).squaredNorm();
  }
  // chain with pinned ends U_0 = U_{d+1} = 0, h = 1/(d+1)
  const double h = 1.0 / (d + 1);
  double v = 0;
  for (int i = 0; i <= d; ++i) {
    const double ui = (i < d) ? x(i) : 0.0;      // U_{i+1} in 1-based terms
    const double uprev = (i > 0) ? x(i - 1) : 0.0;
    const double du = (ui - uprev) / h;
    const double w = 1.0 - ui * ui;
    v += 0.5 * lambda * du * du + w * w / (4.0 * lambda);
  }
  return v;
}

Eigen::RowVectorXd Potential::grad(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (x.size() != d) throw StructuralError("point order does not match potential");
  if (kind == Kind::Custom) return custom_grad(x);
  Eigen::RowVectorXd g(d);
  if (kind == Kind::DoubleWell) {
    g(0) = 4.0 * x(0) * (x(0) * x(0) - 1.0);
    for (int j = 1; j < d; ++j) g(j) = 2.0 * coeff * x(j);
    return g;
  }
  const double h = 1.0 / (d + 1);
  const double k = lambda / (h * h);
  for (int j = 0; j < d; ++j) {
    const double left = (j > 0) ? x(j - 1) : 0.0;
    const double right = (j + 1 < d) ? x(j + 1) : 0.0;
    g(j) = k * (2.0 * x(j) - left - right) + (x(j) * x(j) - 1.0) * x(j) / lambda;
  }
  return g;
}

double Potential::mode_potential(int mode, double x) const {
  if (kind != Kind::DoubleWell) throw StructuralError("potential is not separable");
  if (mode < 0 || mode >= d) throw StructuralError("mode out of range");
  if (mode == 0) {
    const double a = x * x - 1.0;
    return a * a;
  }
  return coeff * x * x;
}

namespace {

double reflect_into(double x, double M) {
  // fold the real line into [-M, M]
  const double period = 4.0 * M;
  double y = std::fmod(x + M, period);
  if (y < 0) y += period;
  return (y <= 2.0 * M) ? y - M : 3.0 * M - y;
}

}  // namespace

void em_advance(Eigen::MatrixXd& pts, const Potential& pot, const LangevinConfig& cfg,
                std::uint64_t seed, std::uint64_t iter, int nthreads) {
  if (pts.cols() != pot.d) throw StructuralError("point order does not match potential");
  if (cfg.substeps < 1) throw StructuralError("need at least one inner step");
  if (cfg.dt < 0) throw StructuralError("negative time step");
  const double h = cfg.dt / cfg.substeps;
  const double noise = std::sqrt(2.0 * h / cfg.beta);
  const double M = cfg.halfwidth;
  parallel_chunks(pts.rows(), nthreads, [&](long long lo, long long hi, int) {
    Eigen::RowVectorXd x(pot.d);
    for (long long i = lo; i < hi; ++i) {
      RngStream rng(mix_seed(seed, 0xe41e, iter, static_cast<std::uint64_t>(i)));
      x = pts.row(i);
      for (int s = 0; s < cfg.substeps; ++s) {
        Eigen::RowVectorXd g = pot.grad(x);
        if (!g.allFinite()) throw NumericalError("potential gradient is not finite");
        for (int j = 0; j < pot.d; ++j)
          x(j) = reflect_into(x(j) - h * g(j) + noise * rng.normal(), M);
      }
      pts.row(i) = x;
    }
  });
}

Eigen::MatrixXd sample_continuous_tt(const TensorTrain<double>& density,
                                     const UnivariateBasis& basis, long long N,
                                     std::uint64_t seed, std::uint64_t iter,
                                     SampleDiagnostics* diag, int nthreads) {
  const int d = density.order();
  const int n = basis.size();
  for (int k = 0; k < d; ++k)
    if (density.core(k).n() != n) throw StructuralError("density mode size does not match basis");

  // fine grid for conditional inversion
  const int G = 512;
  const double M = basis.halfwidth();
  Eigen::VectorXd grid(G + 1);
  for (int g = 0; g <= G; ++g) grid(g) = -M + 2.0 * M * g / G;
  Eigen::MatrixXd bv(G + 1, n);
  for (int g = 0; g <= G; ++g)
    for (int b = 0; b < n; ++b) bv(g, b) = basis.eval(b, grid(g));
  const double dx = 2.0 * M / G;

  // suffix transfer vectors under the basis integrals
  std::vector<Eigen::VectorXd> env(d + 1);
  env[d] = Eigen::VectorXd::Ones(1);
  for (int k = d - 1; k >= 0; --k) {
    Mat<double> tr = Mat<double>::Zero(density.core(k).r0(), density.core(k).r1());
    for (int b = 0; b < n; ++b) tr += basis.integrals()(b) * density.core(k).slices[b];
    env[k] = tr * env[k + 1];
  }
  if (!(env[0](0) != 0) || !std::isfinite(env[0](0)))
    throw NumericalError("density train has degenerate total mass");

  Eigen::MatrixXd pts(N, d);
  std::vector<double> clamped(std::max(1, nthreads), 0.0), total(std::max(1, nthreads), 0.0);
  parallel_chunks(N, nthreads, [&](long long lo, long long hi, int t) {
    Eigen::RowVectorXd a;
    Eigen::VectorXd coef(n), f(G + 1), cdf(G + 1);
    for (long long i = lo; i < hi; ++i) {
      RngStream rng(mix_seed(seed, 0x5a3b, iter, static_cast<std::uint64_t>(i)));
      a = Eigen::RowVectorXd::Ones(1);
      for (int k = 0; k < d; ++k) {
        for (int b = 0; b < n; ++b)
          coef(b) = (a * density.core(k).slices[b] * env[k + 1]).value();
        f.noalias() = bv * coef;
        double neg = 0, tot = 0;
        for (int g = 0; g <= G; ++g) {
          tot += std::abs(f(g));
          if (f(g) < 0) {
            neg -= f(g);
            f(g) = 0;
          }
        }
        clamped[t] += neg;
        total[t] += tot;
        cdf(0) = 0;
        for (int g = 1; g <= G; ++g) cdf(g) = cdf(g - 1) + 0.5 * (f(g - 1) + f(g)) * dx;
        const double mass = cdf(G);
        if (!(mass > 0) || !std::isfinite(mass))
          throw NumericalError("conditional mass vanished while sampling mode " +
                               std::to_string(k));
        const double u = rng.uniform() * mass;
        int g = 1;
        while (g < G && cdf(g) < u) ++g;
        // invert the piecewise-linear density within cell [g-1, g]
        const double r = u - cdf(g - 1);
        const double f0 = f(g - 1), f1 = f(g);
        double tcell;
        if (std::abs(f1 - f0) < 1e-12 * (f0 + f1 + 1e-300)) {
          tcell = (f0 > 0) ? r / (f0 * dx) : 0.5;
        } else {
          const double s = f0 * f0 + 2.0 * (f1 - f0) * r / dx;
          tcell = (std::sqrt(std::max(0.0, s)) - f0) / (f1 - f0);
        }
        const double x = grid(g - 1) + std::clamp(tcell, 0.0, 1.0) * dx;
        pts(i, k) = x;
        // condition the prefix on the drawn coordinate
        Eigen::RowVectorXd next = Eigen::RowVectorXd::Zero(density.core(k).r1());
        for (int b = 0; b < n; ++b) next += basis.eval(b, x) * (a * density.core(k).slices[b]);
        const double scale = (k + 1 <= d) ? next.dot(env[k + 1]) : 1.0;
        if (scale == 0 || !std::isfinite(scale))
          throw NumericalError("conditional prefix degenerated while sampling mode " +
                               std::to_string(k));
        a = next / scale;
      }
    }
  });
  if (diag) {
    double c = 0, tt = 0;
    for (double v : clamped) c += v;
    for (double v : total) tt += v;
    diag->clamped_fraction = (tt > 0) ? c / tt : 0.0;
  }
  return pts;
}

TensorTrain<double> l1_normalize(const TensorTrain<double>& density,
                                 const UnivariateBasis& basis) {
  std::vector<int> modes(density.order());
  std::vector<Vec<double>> weights(density.order(), basis.integrals());
  for (int k = 0; k < density.order(); ++k) modes[k] = k;
  const double z = tt_marginalize(density, modes, weights).value();
  if (!(z != 0) || !std::isfinite(z)) throw NumericalError("density has degenerate total mass");
  return tt_scale(density, 1.0 / z);
}

TensorTrain<double> product_density(const std::vector<Eigen::VectorXd>& node_pdfs,
                                    const UnivariateBasis& basis) {
  std::vector<Vec<double>> factors;
  factors.reserve(node_pdfs.size());
  for (const auto& pdf : node_pdfs) factors.push_back(basis.project_node_values(pdf));
  return l1_normalize(product_tt(factors), basis);
}

TensorTrain<double> uniform_density(int d, const UnivariateBasis& basis) {
  Eigen::VectorXd flat =
      Eigen::VectorXd::Constant(basis.quad().nodes.size(), 0.5 / basis.halfwidth());
  return product_density(std::vector<Eigen::VectorXd>(d, flat), basis);
}

FpeStepResult fpe_step(const TensorTrain<double>& density, const Potential& pot,
                       const LangevinConfig& cfg, const UnivariateBasis& basis,
                       const SketchFamily& sketch, double svd_threshold, std::uint64_t seed,
                       std::uint64_t iter, int nthreads) {
  FpeStepResult out;
  Eigen::MatrixXd pts =
      sample_continuous_tt(density, basis, cfg.particles, seed, iter, &out.diag, nthreads);
  if (out.diag.clamped_fraction > 0.2)
    throw NumericalError("clamped conditional mass fraction " +
                         std::to_string(out.diag.clamped_fraction) + " exceeds 20%");
  if (cfg.dt > 0) em_advance(pts, pot, cfg, seed, iter, nthreads);
  DeltaEnsemble ens{std::move(pts)};
  auto [tt, trim] = solve_cores(accumulate_moments(ens, sketch, nthreads), svd_threshold);
  out.trim = std::move(trim);
  out.density = l1_normalize(tt, basis);
  return out;
}

Eigen::VectorXd tt_marginal_on_grid(const TensorTrain<double>& density,
                                    const UnivariateBasis& basis, int mode) {
  const int d = density.order();
  if (mode < 0 || mode >= d) throw StructuralError("mode out of range");
  std::vector<int> modes;
  for (int k = 0; k < d; ++k)
    if (k != mode) modes.push_back(k);
  std::vector<Vec<double>> weights(modes.size(), basis.integrals());
  TensorTrain<double> m = tt_marginalize(density, modes, weights);
  Eigen::VectorXd coef(basis.size());
  for (int b = 0; b < basis.size(); ++b) coef(b) = m.core(0).slices[b](0, 0);
  return basis.node_values() * coef;
}

double marginal_error(const TensorTrain<double>& density, const Eigen::VectorXd& reference,
                      const UnivariateBasis& basis, int mode) {
  const Eigen::VectorXd got = tt_marginal_on_grid(density, basis, mode);
  if (reference.size() != got.size()) throw StructuralError("reference grid size mismatch");
  const Eigen::VectorXd w = basis.quad().weights;
  const double ref2 = w.dot(reference.cwiseProduct(reference));
  if (!(ref2 > 0)) throw StructuralError("reference marginal has zero norm");
  const Eigen::VectorXd diff = got - reference;
  return std::sqrt(w.dot(diff.cwiseProduct(diff)) / ref2);
}

Eigen::VectorXd equilibrium_marginal(const Potential& pot, double beta,
                                     const UnivariateBasis& basis, int mode) {
  return quad_marginal_1d([&](double x) { return pot.mode_potential(mode, x); }, beta,
                          basis.quad());
}

Eigen::VectorXd mc_equilibrium_marginal(const Potential& pot, const LangevinConfig& cfg,
                                        const UnivariateBasis& basis, int mode, long long N,
                                        double t_total, std::uint64_t seed, int nthreads,
                                        int bins) {
  if (mode < 0 || mode >= pot.d) throw StructuralError("mode out of range");
  const double M = cfg.halfwidth;
  Eigen::MatrixXd pts(N, pot.d);
  parallel_chunks(N, nthreads, [&](long long lo, long long hi, int) {
    for (long long i = lo; i < hi; ++i) {
      RngStream rng(mix_seed(seed, 0x141f, 0, static_cast<std::uint64_t>(i)));
      for (int j = 0; j < pot.d; ++j) pts(i, j) = M * (2.0 * rng.uniform() - 1.0);
    }
  });
  const long long steps = static_cast<long long>(std::ceil(t_total / cfg.dt));
  for (long long s = 0; s < steps; ++s)
    em_advance(pts, pot, cfg, seed, static_cast<std::uint64_t>(s + 1), nthreads);

  // histogram the snapshot, then linear-interpolate bin centers to the grid
  Eigen::VectorXd hist = Eigen::VectorXd::Zero(bins);
  const double bw = 2.0 * M / bins;
  for (long long i = 0; i < N; ++i) {
    int b = static_cast<int>((pts(i, mode) + M) / bw);
    hist(std::clamp(b, 0, bins - 1)) += 1.0;
  }
  hist /= static_cast<double>(N) * bw;
  const Eigen::VectorXd& nodes = basis.quad().nodes;
  Eigen::VectorXd out(nodes.size());
  for (Eigen::Index q = 0; q < nodes.size(); ++q) {
    const double pos = (nodes(q) + M) / bw - 0.5;  // in bin-center coordinates
    const int b0 = static_cast<int>(std::floor(pos));
    if (b0 < 0) out(q) = hist(0);
    else if (b0 + 1 >= bins) out(q) = hist(bins - 1);
    else {
      const double t = pos - b0;
      out(q) = (1.0 - t) * hist(b0) + t * hist(b0 + 1);
    }
  }
  return out;
}

}  // namespace ttv
