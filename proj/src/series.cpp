#include "odeaug/series.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "odeaug/error.hpp"

namespace odeaug {

TimeSeries::TimeSeries(std::vector<std::string> channel_names, double sample_period,
                       Eigen::MatrixXd values, std::optional<Mask> labels)
    : names_(std::move(channel_names)),
      dt_(sample_period),
      values_(std::move(values)),
      labels_(std::move(labels)) {
  validate();
}

void TimeSeries::validate() const {
  if (names_.empty()) throw InvalidArgument("series needs at least one channel");
  if (static_cast<std::size_t>(values_.cols()) != names_.size())
    throw InvalidArgument("value matrix has " + std::to_string(values_.cols()) +
                          " columns but " + std::to_string(names_.size()) +
                          " channel names");
  if (!(dt_ > 0.0) || !std::isfinite(dt_))
    throw InvalidArgument("sample period must be positive and finite");
  if (!values_.allFinite()) throw InvalidArgument("series contains non-finite values");
  if (labels_ && labels_->size() != length())
    throw InvalidArgument("label count does not match row count");
  std::unordered_set<std::string> seen;
  for (const auto& n : names_)
    if (!seen.insert(n).second) throw InvalidArgument("duplicate channel name '" + n + "'");
}

bool TimeSeries::has_channel(const std::string& name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t TimeSeries::channel_index(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw InvalidArgument("unknown channel '" + name + "'");
  return static_cast<std::size_t>(it - names_.begin());
}

Eigen::VectorXd TimeSeries::channel(const std::string& name) const {
  return values_.col(static_cast<Eigen::Index>(channel_index(name)));
}

void TimeSeries::set_channel(const std::string& name, const Eigen::VectorXd& v) {
  if (static_cast<std::size_t>(v.size()) != length())
    throw InvalidArgument("channel length mismatch");
  if (!v.allFinite()) throw InvalidArgument("channel contains non-finite values");
  values_.col(static_cast<Eigen::Index>(channel_index(name))) = v;
}

void TimeSeries::set_labels(std::optional<Mask> labels) {
  if (labels && labels->size() != length())
    throw InvalidArgument("label count does not match row count");
  labels_ = std::move(labels);
}

Mask TimeSeries::labels_or_normal() const {
  return labels_ ? *labels_ : Mask(length(), false);
}

void Dataset::validate() const {
  std::unordered_set<std::string> control(control_channels.begin(), control_channels.end());
  for (const auto& d : dependent_channels)
    if (control.count(d)) throw InvalidArgument("channel '" + d + "' is both control and dependent");
  if (series.empty()) return;
  const auto& names = series.front().channel_names();
  for (const auto& s : series)
    if (s.channel_names() != names) throw InvalidArgument("series disagree on channel layout");
  std::unordered_set<std::string> roles(control);
  roles.insert(dependent_channels.begin(), dependent_channels.end());
  if (roles.size() != names.size())
    throw InvalidArgument("control and dependent sets must cover exactly the series channels");
  for (const auto& n : names)
    if (!roles.count(n)) throw InvalidArgument("channel '" + n + "' has no role");
}

std::size_t Dataset::point_count() const {
  std::size_t n = 0;
  for (const auto& s : series) n += s.length();
  return n;
}

Eigen::VectorXd moving_average(const Eigen::VectorXd& x, int window) {
  const auto n = x.size();
  if (window < 1 || window % 2 == 0)
    throw InvalidArgument("smoothing window must be a positive odd integer");
  if (window > n) throw InvalidArgument("smoothing window exceeds series length");
  const Eigen::Index half = window / 2;
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index r = std::min({half, i, n - 1 - i});
    out[i] = x.segment(i - r, 2 * r + 1).mean();
  }
  return out;
}

TimeSeries smooth(const TimeSeries& series, const std::string& channel, int window) {
  TimeSeries out = series;
  out.set_channel(channel, moving_average(series.channel(channel), window));
  return out;
}

namespace {

Eigen::VectorXd first_derivative(const Eigen::VectorXd& x, double dt) {
  const auto n = x.size();
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 1; i + 1 < n; ++i) d[i] = (x[i + 1] - x[i - 1]) / (2.0 * dt);
  d[0] = (-3.0 * x[0] + 4.0 * x[1] - x[2]) / (2.0 * dt);
  d[n - 1] = (3.0 * x[n - 1] - 4.0 * x[n - 2] + x[n - 3]) / (2.0 * dt);
  return d;
}

}  // namespace

Eigen::VectorXd derivative(const Eigen::VectorXd& x, double dt, int order) {
  if (order < 1) throw InvalidArgument("derivative order must be positive");
  if (x.size() < order + 2 || x.size() < 3)
    throw InvalidArgument("series too short for derivative of order " + std::to_string(order));
  Eigen::VectorXd d = x;
  for (int k = 0; k < order; ++k) d = first_derivative(d, dt);
  return d;
}

std::vector<double> numerical_derivative(const TimeSeries& series, const std::string& channel,
                                         int order) {
  const Eigen::VectorXd d = derivative(series.channel(channel), series.sample_period(), order);
  return {d.data(), d.data() + d.size()};
}

Eigen::VectorXd curvature(const Eigen::VectorXd& x, double dt, int max_order) {
  if (max_order < 1) throw InvalidArgument("max_order must be at least 1");
  const double range = x.size() ? x.maxCoeff() - x.minCoeff() : 0.0;
  Eigen::VectorXd score = Eigen::VectorXd::Zero(x.size());
  // Validate length before the constant shortcut so errors still propagate.
  derivative(x, dt, max_order);
  if (range == 0.0) return score;
  for (int k = 1; k <= max_order; ++k) {
    Eigen::VectorXd d = derivative(x, dt, k);
    const double mean = d.mean();
    const double sd = std::sqrt((d.array() - mean).square().mean());
    const double tol = 1e-9 * range / std::pow(dt, k);
    if (sd <= tol)
      score.array() += std::abs(mean);
    else
      score.array() += d.array().abs() / sd;
  }
  return score;
}

std::vector<double> curvature_score(const TimeSeries& series, const std::string& channel,
                                    int max_order) {
  const Eigen::VectorXd s = curvature(series.channel(channel), series.sample_period(), max_order);
  return {s.data(), s.data() + s.size()};
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t b = 0;
    while (b < cell.size() && cell[b] == ' ') ++b;
    out.push_back(cell.substr(b));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ParseError(line, "not a number: '" + s + "'");
  if (!std::isfinite(v)) throw ParseError(line, "non-finite value: '" + s + "'");
  return v;
}

}  // namespace

TimeSeries read_csv(std::istream& in, const std::string& source) {
  const auto fail = [&](std::size_t line, const std::string& msg) -> ParseError {
    return ParseError(line, source.empty() ? msg : source + ": " + msg);
  };
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw fail(1, "missing header row");
  ++lineno;
  auto header = split_csv_line(line);
  if (header.empty() || header.front() != "t")
    throw fail(lineno, "header must start with column 't'");
  const bool has_label = header.size() >= 2 && header.back() == "label";
  std::vector<std::string> names(header.begin() + 1, header.end() - (has_label ? 1 : 0));
  if (names.empty()) throw fail(lineno, "header names no channels");
  for (const auto& n : names)
    if (n.empty()) throw fail(lineno, "empty channel name");

  std::vector<double> flat;
  std::vector<double> times;
  Mask labels;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw fail(lineno, "expected " + std::to_string(header.size()) + " fields, got " +
                                   std::to_string(cells.size()));
    const double t = parse_number(cells[0], lineno);
    if (!times.empty()) {
      if (t <= times.back()) throw fail(lineno, "t is not strictly increasing");
      if (times.size() >= 2) {
        const double step = times[1] - times[0];
        if (std::abs((t - times.back()) - step) > 1e-6 * step + 1e-12)
          throw fail(lineno, "t step is not constant");
      }
    }
    times.push_back(t);
    for (std::size_t c = 0; c < names.size(); ++c) flat.push_back(parse_number(cells[c + 1], lineno));
    if (has_label) {
      const auto& l = cells.back();
      if (l == "0")
        labels.push_back(false);
      else if (l == "1")
        labels.push_back(true);
      else
        throw fail(lineno, "label must be 0 or 1, got '" + l + "'");
    }
  }
  if (times.size() < 2) throw fail(lineno, "need at least two data rows");
  const auto rows = static_cast<Eigen::Index>(times.size());
  const auto cols = static_cast<Eigen::Index>(names.size());
  Eigen::MatrixXd values =
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(flat.data(),
                                                                                       rows, cols);
  std::optional<Mask> lab;
  if (has_label) lab = std::move(labels);
  return TimeSeries(std::move(names), times[1] - times[0], std::move(values), std::move(lab));
}

TimeSeries read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  return read_csv(in, path);
}

void write_csv(std::ostream& out, const TimeSeries& series) {
  out << 't';
  for (const auto& n : series.channel_names()) out << ',' << n;
  const bool labeled = series.labels().has_value();
  if (labeled) out << ",label";
  out << '\n';
  const auto& v = series.values();
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    out << format_double(static_cast<double>(i) * series.sample_period());
    for (Eigen::Index c = 0; c < v.cols(); ++c) out << ',' << format_double(v(i, c));
    if (labeled) out << ',' << ((*series.labels())[static_cast<std::size_t>(i)] ? '1' : '0');
    out << '\n';
  }
}

void write_csv_file(const std::string& path, const TimeSeries& series) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  write_csv(out, series);
}

}  // namespace odeaug
