#pragma once

#include <Eigen/Dense>

#include "ttevolve/common.hpp"

namespace ttv {

struct QuadRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

// Gauss-Legendre rule of the given order mapped to [a, b].
QuadRule gauss_legendre(int order, double a, double b);

// A set of n univariate functions b_l on [-M, M] together with a fixed
// quadrature rule; all continuous-mode sums in the library are
// quadrature-weighted sums against this object.
class UnivariateBasis {
 public:
  UnivariateBasis(Eigen::VectorXd centers, double width, double halfwidth, int quad_order);

  int size() const { return static_cast<int>(centers_.size()); }
  double halfwidth() const { return m_; }
  double center(int l) const { return centers_(l); }
  double width() const { return width_; }

  double eval(int l, double x) const;
  void eval_all(double x, double* out) const;
  Eigen::VectorXd eval_all(double x) const;

  const QuadRule& quad() const { return quad_; }
  // (quad order x n) values b_l(t_q)
  const Eigen::MatrixXd& node_values() const { return node_vals_; }
  // integrals of each b_l over [-M, M]
  const Eigen::VectorXd& integrals() const { return integrals_; }
  // overlap matrix <b_l, b_m>
  const Eigen::MatrixXd& gram() const { return gram_; }

  // coefficients minimizing the L2 distance to a function given by its
  // values on the quadrature grid
  Eigen::VectorXd project_node_values(const Eigen::VectorXd& values) const;
  // apply gram^{-1} to columns stacked in a matrix (n x m)
  Eigen::MatrixXd gram_solve(const Eigen::MatrixXd& rhs) const;

 private:
  Eigen::VectorXd centers_;
  double width_;
  double m_;
  QuadRule quad_;
  Eigen::MatrixXd node_vals_;
  Eigen::VectorXd integrals_;
  Eigen::MatrixXd gram_;
  Eigen::LDLT<Eigen::MatrixXd> gram_fact_;
};

// Gaussian bump basis b_l(x) = exp(-(x + M - (l-1) dx)^2 / (2 dx^2)),
// centers -M, -M+dx, ..., covering [-M, M].
UnivariateBasis gaussian_kernel_basis(int n = 20, double halfwidth = 2.5,
                                      double dx = 5.0 / 18.0, int quad_order = 64);

}  // namespace ttv
