#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace odeaug {

using Mask = std::vector<bool>;

/// Uniformly sampled multichannel series; one row per time step.
class TimeSeries {
 public:
  TimeSeries() = default;
  TimeSeries(std::vector<std::string> channel_names, double sample_period,
             Eigen::MatrixXd values, std::optional<Mask> labels = std::nullopt);

  const std::vector<std::string>& channel_names() const { return names_; }
  double sample_period() const { return dt_; }
  const Eigen::MatrixXd& values() const { return values_; }
  const std::optional<Mask>& labels() const { return labels_; }

  std::size_t length() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t channel_count() const { return names_.size(); }

  bool has_channel(const std::string& name) const;
  /// Column index of a channel; throws InvalidArgument when absent.
  std::size_t channel_index(const std::string& name) const;
  Eigen::VectorXd channel(const std::string& name) const;

  /// Replaces one channel's values; length must match.
  void set_channel(const std::string& name, const Eigen::VectorXd& v);
  void set_labels(std::optional<Mask> labels);

  /// Labels, or an all-false mask when the series is unlabeled.
  Mask labels_or_normal() const;

 private:
  void validate() const;

  std::vector<std::string> names_;
  double dt_ = 1.0;
  Eigen::MatrixXd values_;
  std::optional<Mask> labels_;
};

/// Collection of series sharing a channel layout, split into roles.
struct Dataset {
  std::vector<TimeSeries> series;
  std::vector<std::string> control_channels;
  std::vector<std::string> dependent_channels;

  /// Throws InvalidArgument if the role sets overlap, miss a channel, or the
  /// series disagree on channel names.
  void validate() const;
  std::size_t point_count() const;
};

/// Centered moving average of one channel. The window shrinks symmetrically
/// near the ends so every output stays centered on its sample.
TimeSeries smooth(const TimeSeries& series, const std::string& channel, int window);
Eigen::VectorXd moving_average(const Eigen::VectorXd& x, int window);

/// Order-th derivative by repeated second-order central differences
/// (second-order one-sided stencils at both ends), in units per second^order.
std::vector<double> numerical_derivative(const TimeSeries& series,
                                         const std::string& channel, int order);
Eigen::VectorXd derivative(const Eigen::VectorXd& x, double dt, int order);

/// Sum over k = 1..max_order of |d_k(t)| / std(d_k). A derivative whose
/// spread is indistinguishable from rounding is treated as the constant
/// equal to its mean, with unit scale.
std::vector<double> curvature_score(const TimeSeries& series,
                                    const std::string& channel, int max_order = 3);
Eigen::VectorXd curvature(const Eigen::VectorXd& x, double dt, int max_order = 3);

// CSV: header `t,<channels...>[,label]`, t strictly increasing with a
// constant step, label in {0,1}.
TimeSeries read_csv(std::istream& in, const std::string& source = {});
TimeSeries read_csv_file(const std::string& path);
void write_csv(std::ostream& out, const TimeSeries& series);
void write_csv_file(const std::string& path, const TimeSeries& series);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

}  // namespace odeaug
