#include "spdcsim/optim.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace spdcsim {

OptimResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                        const Eigen::VectorXd& x0, const Eigen::VectorXd& steps,
                        double tol, int max_iter) {
  const auto n = x0.size();
  std::vector<Eigen::VectorXd> pts;
  std::vector<double> vals;
  pts.reserve(static_cast<std::size_t>(n) + 1);
  pts.push_back(x0);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd p = x0;
    p(i) += steps(i) != 0.0 ? steps(i) : 1e-3;
    pts.push_back(p);
  }
  for (const auto& p : pts) vals.push_back(f(p));

  std::vector<std::size_t> order(pts.size());
  OptimResult res;
  for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front(), worst = order.back(),
                      second = order[order.size() - 2];
    if (std::abs(vals[worst] - vals[best]) <= tol * (1.0 + std::abs(vals[best]))) {
      res.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i : order)
      if (i != worst) centroid += pts[i];
    centroid /= static_cast<double>(pts.size() - 1);

    const Eigen::VectorXd refl = centroid + (centroid - pts[worst]);
    const double frefl = f(refl);
    if (frefl < vals[best]) {
      const Eigen::VectorXd exp_ = centroid + 2.0 * (centroid - pts[worst]);
      const double fexp = f(exp_);
      if (fexp < frefl) {
        pts[worst] = exp_;
        vals[worst] = fexp;
      } else {
        pts[worst] = refl;
        vals[worst] = frefl;
      }
    } else if (frefl < vals[second]) {
      pts[worst] = refl;
      vals[worst] = frefl;
    } else {
      const Eigen::VectorXd contr = centroid + 0.5 * (pts[worst] - centroid);
      const double fcontr = f(contr);
      if (fcontr < vals[worst]) {
        pts[worst] = contr;
        vals[worst] = fcontr;
      } else {
        for (std::size_t i : order) {
          if (i == best) continue;
          pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
          vals[i] = f(pts[i]);
        }
      }
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < vals.size(); ++i)
    if (vals[i] < vals[best]) best = i;
  res.x = pts[best];
  res.value = vals[best];
  return res;
}

OptimResult bfgs(const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& fg,
                 const Eigen::VectorXd& x0, double improvement_tol, int max_iter) {
  const auto n = x0.size();
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n); // inverse Hessian estimate
  Eigen::VectorXd x = x0, g(n);
  double fx = fg(x, g);

  OptimResult res;
  for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
    const Eigen::VectorXd dir = -(h * g);
    double slope = g.dot(dir);
    Eigen::VectorXd step_dir = dir;
    if (!(slope < 0.0)) { // not a descent direction, reset to steepest descent
      h = Eigen::MatrixXd::Identity(n, n);
      step_dir = -g;
      slope = -g.squaredNorm();
      if (!(slope < 0.0)) {
        res.converged = true; // zero gradient
        break;
      }
    }

    double t = 1.0;
    Eigen::VectorXd xn(n), gn(n);
    double fn = fx;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      xn = x + t * step_dir;
      fn = fg(xn, gn);
      if (std::isfinite(fn) && fn <= fx + 1e-4 * t * slope) {
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) {
      res.converged = true; // no improving step along the search direction
      break;
    }

    const double improvement = fx - fn;
    const Eigen::VectorXd s = xn - x;
    const Eigen::VectorXd yv = gn - g;
    const double sy = s.dot(yv);
    if (sy > 1e-14) {
      const Eigen::MatrixXd i = Eigen::MatrixXd::Identity(n, n);
      const Eigen::MatrixXd a = i - (s * yv.transpose()) / sy;
      h = a * h * a.transpose() + (s * s.transpose()) / sy;
    }
    x = xn;
    g = gn;
    fx = fn;
    if (improvement < improvement_tol) {
      res.converged = true;
      break;
    }
  }
  res.x = x;
  res.value = fx;
  return res;
}

} // namespace spdcsim
