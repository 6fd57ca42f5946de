#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "kprog/data/series.hpp"
#include "kprog/nn/matrix.hpp"

namespace kprog::data {

// Which channels form the state vector x and which the control vector u.
// Each vector is the concatenation of per-channel windows.
struct WindowLayout {
  std::vector<std::string> state_channels;
  std::vector<std::string> control_channels;
  std::size_t window_size = 100;
  std::size_t stride = 100;

  std::size_t state_dim() const { return state_channels.size() * window_size; }
  std::size_t control_dim() const { return control_channels.size() * window_size; }

  // voltage, temperature and current all in x (uncontrolled models).
  static WindowLayout battery_state(std::size_t window_size = 100);
  // voltage and temperature in x, current in u (controlled models).
  static WindowLayout battery_controlled(std::size_t window_size = 100);

  friend bool operator==(const WindowLayout&, const WindowLayout&) = default;
};

nlohmann::json to_json(const WindowLayout& layout);
WindowLayout window_layout_from_json(const nlohmann::json& doc);

// Per-channel standardization, fitted on training series and then frozen.
struct Standardizer {
  std::vector<std::string> channels;
  std::vector<double> mean;
  std::vector<double> stddev;

  static Standardizer fit(const std::vector<TimeSeries>& series, const std::vector<std::string>& channels);
  double apply(std::size_t channel, double value) const { return (value - mean[channel]) / stddev[channel]; }
  std::size_t index(const std::string& channel) const;

  friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

nlohmann::json to_json(const Standardizer& s);
Standardizer standardizer_from_json(const nlohmann::json& doc);

struct WindowSample {
  std::vector<double> x;
  std::vector<double> u;
  double rul = 0.0;        // label at the window's last timestep
  double end_time = 0.0;   // time of the window's last timestep
  std::size_t trajectory = 0;
  std::size_t start = 0;
};

// Windows start at 0, stride, 2*stride, ...; count = (len - size) / stride + 1.
// Channels are standardized when a standardizer is given.
std::vector<WindowSample> windowize(const TimeSeries& series, const WindowLayout& layout,
                                    const Standardizer* standardizer = nullptr,
                                    std::size_t trajectory_index = 0);

// Windows from many trajectories packed row-wise for batched evaluation.
struct WindowTable {
  nn::Matrix x;
  nn::Matrix u;
  std::vector<double> rul;
  std::vector<double> end_time;
  std::vector<double> eol_time;  // end of life of the source trajectory
  std::vector<std::size_t> trajectory;
  std::vector<std::size_t> start;
  std::size_t stride = 1;  // layout stride the windows were cut with

  std::size_t size() const { return rul.size(); }
  // Rows for which keep(i) holds, in order.
  template <typename Pred>
  WindowTable filter(Pred keep) const;
  WindowTable rows(const std::vector<std::size_t>& indices) const;
};

WindowTable build_table(const std::vector<TimeSeries>& series, const WindowLayout& layout,
                        const Standardizer* standardizer);

// Row indices k such that rows k..k+horizon are consecutive windows of one
// trajectory (start advancing by exactly the layout stride).
std::vector<std::size_t> sequence_starts(const WindowTable& table, std::size_t horizon, std::size_t stride);

template <typename Pred>
WindowTable WindowTable::filter(Pred keep) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < size(); ++i)
    if (keep(i)) idx.push_back(i);
  return rows(idx);
}

struct SplitSpec {
  std::size_t train_count = 100;
  std::size_t test_count = 100;
  std::size_t rul_supervision_count = 1;

  void validate() const;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::vector<std::size_t> supervision;  // subset of train
};

// Disjoint shuffled split of fleet indices [0, fleet_size).
Split split(std::size_t fleet_size, const SplitSpec& spec, std::uint64_t seed);

template <typename T>
std::vector<T> select(const std::vector<T>& items, const std::vector<std::size_t>& indices) {
  std::vector<T> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(items.at(i));
  return out;
}

}  // namespace kprog::data
