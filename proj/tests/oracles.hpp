#pragma once

// Test-only oracles, independent of the library implementation paths they
// check: adaptive quadrature, finite differences, and a brute-force LP vertex
// enumerator.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace oracles {

inline double simpson(const std::function<double(double)>& f, double a, double b) {
  double m = 0.5 * (a + b);
  return (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                                   double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double left = simpson(f, a, m), right = simpson(f, m, b);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson_rec(f, a, m, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, right, 0.5 * tol, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12) {
  return adaptive_simpson_rec(f, a, b, simpson(f, a, b), tol, 60);
}

inline double central_diff(const std::function<double(double)>& f, double x,
                           double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double central_diff2(const std::function<double(double)>& f, double x,
                            double h = 1e-4) {
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

// Mixed second partial of a bivariate function.
inline double central_diff_mixed(const std::function<double(double, double)>& f, double x,
                                 double y, double h = 1e-4) {
  return (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) /
         (4.0 * h * h);
}

// Brute-force LP solver: enumerates all basic solutions of the equality-form
// system (inequalities get slack variables) and keeps the feasible one with
// the best objective. Only for tiny problems.
struct BruteLp {
  Eigen::MatrixXd A;  // equality rows over nonnegative variables
  Eigen::VectorXd b;
  Eigen::VectorXd c;  // minimize c'x
};

inline std::optional<std::pair<Eigen::VectorXd, double>> brute_force_lp(const BruteLp& lp) {
  const int m = static_cast<int>(lp.A.rows());
  const int n = static_cast<int>(lp.A.cols());
  std::optional<std::pair<Eigen::VectorXd, double>> best;
  std::vector<int> idx(m);
  std::function<void(int, int)> rec = [&](int start, int k) {
    if (k == m) {
      Eigen::MatrixXd B(m, m);
      for (int i = 0; i < m; ++i) B.col(i) = lp.A.col(idx[i]);
      Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
      if (lu.rank() < m) return;
      Eigen::VectorXd xb = lu.solve(lp.b);
      for (int i = 0; i < m; ++i)
        if (xb(i) < -1e-9) return;
      Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
      for (int i = 0; i < m; ++i) x(idx[i]) = std::max(0.0, xb(i));
      if ((lp.A * x - lp.b).cwiseAbs().maxCoeff() > 1e-7) return;
      double obj = lp.c.dot(x);
      if (!best || obj < best->second - 1e-12) best = {x, obj};
      return;
    }
    for (int j = start; j < n; ++j) {
      idx[k] = j;
      rec(j + 1, k + 1);
    }
  };
  rec(0, 0);
  return best;
}

struct MomentStats {
  double mean = 0, var = 0, skew = 0, kurt = 0;
};

inline MomentStats sample_moments(const std::vector<double>& x) {
  MomentStats s;
  const double n = static_cast<double>(x.size());
  for (double v : x) s.mean += v;
  s.mean /= n;
  double m2 = 0, m3 = 0, m4 = 0;
  for (double v : x) {
    double d = v - s.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  s.var = m2;
  s.skew = m3 / std::pow(m2, 1.5);
  s.kurt = m4 / (m2 * m2);
  return s;
}

}  // namespace oracles
