#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "odeaug/ode.hpp"
#include "odeaug/series.hpp"

namespace testutil {

/// Alternating levels, each held for the matching duration.
inline Eigen::VectorXd square_wave(const std::vector<double>& levels,
                                   const std::vector<std::size_t>& durations) {
  std::size_t n = 0;
  for (auto d : durations) n += d;
  Eigen::VectorXd u(static_cast<Eigen::Index>(n));
  Eigen::Index k = 0;
  for (std::size_t s = 0; s < durations.size(); ++s)
    for (std::size_t i = 0; i < durations[s]; ++i) u[k++] = levels[s % levels.size()];
  return u;
}

inline odeaug::TimeSeries pair_series(const Eigen::VectorXd& u, const Eigen::VectorXd& x,
                                      double dt = 1.0) {
  Eigen::MatrixXd v(u.size(), 2);
  v.col(0) = u;
  v.col(1) = x;
  return odeaug::TimeSeries({"u", "x"}, dt, v);
}

/// linear1 trajectory driven by `u`, started at its equilibrium for u[0].
inline odeaug::TimeSeries linear1_series(const Eigen::VectorXd& u, const std::vector<double>& p,
                                         double dt = 1.0) {
  const double x0 = (p[0] * u[0] + p[2]) / p[1];
  const auto params = odeaug::OdeParams::single(p, static_cast<std::size_t>(u.size()));
  const auto x = odeaug::integrate(odeaug::linear1(), params,
                                   std::span<const double>(u.data(), static_cast<std::size_t>(u.size())), x0, dt);
  return pair_series(u, Eigen::Map<const Eigen::VectorXd>(x.data(), u.size()), dt);
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() / ("odeaug_test_" + tag);
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string str(const std::string& rel = {}) const { return (path / rel).string(); }
};

}  // namespace testutil
