#pragma once

#include <Eigen/Dense>
#include <functional>

namespace satdesign {

// scale * (pi' Q pi + c' pi) + constant
struct QuadraticForm {
  Eigen::MatrixXd Q;
  Eigen::VectorXd c;
  double scale = 1.0;
  double constant = 0.0;

  double value(const Eigen::VectorXd& pi) const { return scale * (pi.dot(Q * pi) + c.dot(pi)) + constant; }
  Eigen::VectorXd gradient(const Eigen::VectorXd& pi) const { return scale * ((Q + Q.transpose()) * pi + c); }
};

struct SmoothObjective {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

inline SmoothObjective as_smooth(const QuadraticForm& q) {
  return {[q](const Eigen::VectorXd& x) { return q.value(x); },
          [q](const Eigen::VectorXd& x) { return q.gradient(x); }};
}

}  // namespace satdesign
