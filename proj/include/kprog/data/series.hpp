#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kprog/battery/simulator.hpp"

namespace kprog::data {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A named-channel time series. Battery trajectories and externally
// featurized data (e.g. machining features) both end up here.
struct TimeSeries {
  std::string id;
  std::vector<double> time;
  std::vector<std::string> channel_names;
  std::vector<std::vector<double>> channels;
  std::optional<std::vector<double>> rul;  // explicit labels, if the source had them
  std::optional<double> eol_time;          // set for run-to-failure records

  std::size_t size() const { return time.size(); }
  std::size_t channel_index(const std::string& name) const;
  const std::vector<double>& channel(const std::string& name) const {
    return channels[channel_index(name)];
  }
};

// Observable channels only: voltage_v, temperature_k, current_a.
TimeSeries to_series(const battery::Trajectory& trajectory, std::string id = {});

// Reads either the battery trajectory schema or a generic CSV with a time_s
// column, arbitrary numeric feature columns and an optional rul_norm column.
// A battery-schema file (capacity_frac present) is a run-to-failure record
// whose last timestamp is the end of life.
TimeSeries read_series_csv(const std::filesystem::path& path);

// rul(t) = (t_eol - t) / t_eol, or the explicit labels when present.
std::vector<double> label_rul(const TimeSeries& series);
std::vector<double> label_rul(const battery::Trajectory& trajectory);

}  // namespace kprog::data
