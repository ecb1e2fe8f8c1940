#include "ttevolve/basis.hpp"

#include <cmath>

namespace ttv {

QuadRule gauss_legendre(int order, double a, double b) {
  if (order < 1) throw StructuralError("gauss_legendre: order must be >= 1");
  if (!(b > a)) throw StructuralError("gauss_legendre: need b > a");
  Eigen::VectorXd x(order), w(order);
  // Newton iteration on P_n, symmetric roots
  int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (order + 0.5));
    double pp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < order; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = order * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x(i) = -z;
    x(order - 1 - i) = z;
    double wi = 2.0 / ((1.0 - z * z) * pp * pp);
    w(i) = wi;
    w(order - 1 - i) = wi;
  }
  double mid = 0.5 * (a + b), scale = 0.5 * (b - a);
  QuadRule q;
  q.nodes = (x.array() * scale + mid).matrix();
  q.weights = w * scale;
  return q;
}

UnivariateBasis::UnivariateBasis(Eigen::VectorXd centers, double width, double halfwidth,
                                 int quad_order)
    : centers_(std::move(centers)), width_(width), m_(halfwidth) {
  if (centers_.size() < 2) throw StructuralError("UnivariateBasis: need at least 2 functions");
  if (width_ <= 0 || m_ <= 0) throw StructuralError("UnivariateBasis: width and halfwidth must be > 0");
  quad_ = gauss_legendre(quad_order, -m_, m_);
  int q = static_cast<int>(quad_.nodes.size());
  node_vals_.resize(q, size());
  for (int i = 0; i < q; ++i)
    for (int l = 0; l < size(); ++l) node_vals_(i, l) = eval(l, quad_.nodes(i));
  integrals_ = node_vals_.transpose() * quad_.weights;
  gram_ = node_vals_.transpose() * quad_.weights.asDiagonal() * node_vals_;
  gram_fact_.compute(gram_);
  if (gram_fact_.info() != Eigen::Success)
    throw NumericalError("UnivariateBasis: gram matrix factorization failed");
}

double UnivariateBasis::eval(int l, double x) const {
  double u = (x - centers_(l)) / width_;
  return std::exp(-0.5 * u * u);
}

void UnivariateBasis::eval_all(double x, double* out) const {
  for (int l = 0; l < size(); ++l) out[l] = eval(l, x);
}

Eigen::VectorXd UnivariateBasis::eval_all(double x) const {
  Eigen::VectorXd v(size());
  eval_all(x, v.data());
  return v;
}

Eigen::VectorXd UnivariateBasis::project_node_values(const Eigen::VectorXd& values) const {
  if (values.size() != quad_.nodes.size())
    throw StructuralError("project_node_values: length != quadrature order");
  Eigen::VectorXd rhs = node_vals_.transpose() * (quad_.weights.array() * values.array()).matrix();
  return gram_fact_.solve(rhs);
}

Eigen::MatrixXd UnivariateBasis::gram_solve(const Eigen::MatrixXd& rhs) const {
  if (rhs.rows() != gram_.rows()) throw StructuralError("gram_solve: row count != basis size");
  return gram_fact_.solve(rhs);
}

UnivariateBasis gaussian_kernel_basis(int n, double halfwidth, double dx, int quad_order) {
  if (n < 2) throw StructuralError("gaussian_kernel_basis: need n >= 2");
  Eigen::VectorXd centers(n);
  for (int l = 0; l < n; ++l) centers(l) = -halfwidth + l * dx;
  return UnivariateBasis(std::move(centers), dx, halfwidth, quad_order);
}

}  // namespace ttv
