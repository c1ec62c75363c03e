#pragma once

#include <algorithm>
#include <cmath>

#include "odeaug/lstm.hpp"
#include "odeaug/random.hpp"

namespace testutil {

inline odeaug::SequenceBatch random_batch(std::size_t inputs, std::size_t outputs, std::size_t steps,
                                          std::size_t batch, odeaug::Rng& rng) {
  odeaug::SequenceBatch b;
  const auto I = static_cast<Eigen::Index>(inputs), O = static_cast<Eigen::Index>(outputs),
             B = static_cast<Eigen::Index>(batch);
  for (std::size_t t = 0; t < steps; ++t) {
    Eigen::MatrixXd x(I, B), y(O, B), w(O, B);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform() < 0.2 ? 0.0 : 1.0;
    b.inputs.push_back(x);
    b.targets.push_back(y);
    b.weights.push_back(w);
  }
  return b;
}

/// Largest relative error between the analytic gradient and central
/// differences over every parameter.
inline double max_gradient_error(const odeaug::LstmNetwork& net, const odeaug::SequenceBatch& batch,
                                 double h = 1e-5) {
  odeaug::LstmNetwork grad;
  odeaug::sequence_loss(net, batch, &grad);
  const Eigen::VectorXd g = grad.flatten();
  Eigen::VectorXd theta = net.flatten();
  odeaug::LstmNetwork probe = net;
  double worst = 0.0;
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    const double keep = theta[k];
    theta[k] = keep + h;
    probe.assign(theta);
    const double up = odeaug::sequence_loss(probe, batch, nullptr);
    theta[k] = keep - h;
    probe.assign(theta);
    const double down = odeaug::sequence_loss(probe, batch, nullptr);
    theta[k] = keep;
    const double numeric = (up - down) / (2 * h);
    const double scale = std::max({std::abs(numeric), std::abs(g[k]), 1e-6});
    worst = std::max(worst, std::abs(numeric - g[k]) / scale);
  }
  return worst;
}

}  // namespace testutil
