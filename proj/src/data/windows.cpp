#include "kprog/data/windows.hpp"

#include <algorithm>
#include <cmath>

#include "kprog/core/rng.hpp"

namespace kprog::data {

WindowLayout WindowLayout::battery_state(std::size_t window_size) {
  return {{"voltage_v", "temperature_k", "current_a"}, {}, window_size, window_size};
}

WindowLayout WindowLayout::battery_controlled(std::size_t window_size) {
  return {{"voltage_v", "temperature_k"}, {"current_a"}, window_size, window_size};
}

nlohmann::json to_json(const WindowLayout& l) {
  return {{"state_channels", l.state_channels},
          {"control_channels", l.control_channels},
          {"window_size", l.window_size},
          {"stride", l.stride}};
}

WindowLayout window_layout_from_json(const nlohmann::json& doc) {
  WindowLayout l;
  l.state_channels = doc.at("state_channels").get<std::vector<std::string>>();
  l.control_channels = doc.value("control_channels", std::vector<std::string>{});
  l.window_size = doc.at("window_size").get<std::size_t>();
  l.stride = doc.value("stride", l.window_size);
  return l;
}

Standardizer Standardizer::fit(const std::vector<TimeSeries>& series, const std::vector<std::string>& channels) {
  if (series.empty()) throw DataError("cannot fit normalization on an empty set of series");
  Standardizer s;
  s.channels = channels;
  for (const std::string& name : channels) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const TimeSeries& ts : series)
      for (double v : ts.channel(name)) {
        sum += v;
        ++n;
      }
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (const TimeSeries& ts : series)
      for (double v : ts.channel(name)) sq += (v - mean) * (v - mean);
    double stddev = std::sqrt(sq / static_cast<double>(n));
    if (!(stddev > 1e-12)) stddev = 1.0;
    s.mean.push_back(mean);
    s.stddev.push_back(stddev);
  }
  return s;
}

std::size_t Standardizer::index(const std::string& channel) const {
  const auto it = std::find(channels.begin(), channels.end(), channel);
  if (it == channels.end()) throw DataError("normalization has no entry for channel '" + channel + "'");
  return static_cast<std::size_t>(it - channels.begin());
}

nlohmann::json to_json(const Standardizer& s) {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t i = 0; i < s.channels.size(); ++i)
    out.push_back({{"channel", s.channels[i]}, {"mean", s.mean[i]}, {"std", s.stddev[i]}});
  return out;
}

Standardizer standardizer_from_json(const nlohmann::json& doc) {
  Standardizer s;
  for (const auto& e : doc) {
    s.channels.push_back(e.at("channel").get<std::string>());
    s.mean.push_back(e.at("mean").get<double>());
    s.stddev.push_back(e.at("std").get<double>());
  }
  return s;
}

namespace {

struct ChannelRef {
  const std::vector<double>* values;
  std::optional<std::size_t> norm;
};

std::vector<ChannelRef> resolve(const TimeSeries& s, const std::vector<std::string>& names,
                                const Standardizer* standardizer) {
  std::vector<ChannelRef> out;
  for (const std::string& name : names) {
    ChannelRef ref{&s.channel(name), std::nullopt};
    if (standardizer) ref.norm = standardizer->index(name);
    out.push_back(ref);
  }
  return out;
}

void fill(std::span<double> dst, const std::vector<ChannelRef>& refs, std::size_t start, std::size_t size,
          const Standardizer* standardizer, const std::string& id) {
  std::size_t k = 0;
  for (const ChannelRef& ref : refs)
    for (std::size_t t = start; t < start + size; ++t) {
      double v = (*ref.values)[t];
      if (ref.norm) v = standardizer->apply(*ref.norm, v);
      if (!std::isfinite(v)) throw DataError("series '" + id + "' has a non-finite value at index " + std::to_string(t));
      dst[k++] = v;
    }
}

std::size_t window_count(const TimeSeries& s, const WindowLayout& layout) {
  if (layout.window_size < 1 || layout.stride < 1) throw DataError("window size and stride must be >= 1");
  if (s.size() < layout.window_size)
    throw DataError("series '" + s.id + "' has " + std::to_string(s.size()) + " samples, shorter than window size " +
                    std::to_string(layout.window_size));
  return (s.size() - layout.window_size) / layout.stride + 1;
}

}  // namespace

std::vector<WindowSample> windowize(const TimeSeries& s, const WindowLayout& layout,
                                    const Standardizer* standardizer, std::size_t trajectory_index) {
  const std::size_t count = window_count(s, layout);
  const auto state = resolve(s, layout.state_channels, standardizer);
  const auto control = resolve(s, layout.control_channels, standardizer);
  const std::vector<double> rul = label_rul(s);

  std::vector<WindowSample> out(count);
  for (std::size_t w = 0; w < count; ++w) {
    WindowSample& sample = out[w];
    const std::size_t start = w * layout.stride;
    const std::size_t last = start + layout.window_size - 1;
    sample.x.resize(layout.state_dim());
    sample.u.resize(layout.control_dim());
    fill(sample.x, state, start, layout.window_size, standardizer, s.id);
    fill(sample.u, control, start, layout.window_size, standardizer, s.id);
    sample.rul = std::clamp(rul[last], 0.0, 1.0);
    sample.end_time = s.time[last];
    sample.trajectory = trajectory_index;
    sample.start = start;
  }
  return out;
}

WindowTable WindowTable::rows(const std::vector<std::size_t>& indices) const {
  WindowTable out;
  out.stride = stride;
  out.x = nn::Matrix(indices.size(), x.cols());
  out.u = nn::Matrix(indices.size(), u.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const std::size_t i = indices[r];
    std::copy(x.row(i).begin(), x.row(i).end(), out.x.row(r).begin());
    std::copy(u.row(i).begin(), u.row(i).end(), out.u.row(r).begin());
    out.rul.push_back(rul[i]);
    out.end_time.push_back(end_time[i]);
    out.eol_time.push_back(eol_time[i]);
    out.trajectory.push_back(trajectory[i]);
    out.start.push_back(start[i]);
  }
  return out;
}

WindowTable build_table(const std::vector<TimeSeries>& series, const WindowLayout& layout,
                        const Standardizer* standardizer) {
  std::size_t total = 0;
  for (const TimeSeries& s : series) total += window_count(s, layout);

  WindowTable table;
  table.stride = layout.stride;
  table.x = nn::Matrix(total, layout.state_dim());
  table.u = nn::Matrix(total, layout.control_dim());
  std::size_t row = 0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const TimeSeries& s = series[i];
    const std::size_t count = window_count(s, layout);
    const auto state = resolve(s, layout.state_channels, standardizer);
    const auto control = resolve(s, layout.control_channels, standardizer);
    const std::vector<double> rul = label_rul(s);
    const double eol = s.eol_time.value_or(s.time.back());
    for (std::size_t w = 0; w < count; ++w, ++row) {
      const std::size_t start = w * layout.stride;
      const std::size_t last = start + layout.window_size - 1;
      fill(table.x.row(row), state, start, layout.window_size, standardizer, s.id);
      fill(table.u.row(row), control, start, layout.window_size, standardizer, s.id);
      table.rul.push_back(std::clamp(rul[last], 0.0, 1.0));
      table.end_time.push_back(s.time[last]);
      table.eol_time.push_back(eol);
      table.trajectory.push_back(i);
      table.start.push_back(start);
    }
  }
  return table;
}

std::vector<std::size_t> sequence_starts(const WindowTable& table, std::size_t horizon, std::size_t stride) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k + horizon < table.size(); ++k) {
    bool ok = true;
    for (std::size_t j = 1; j <= horizon && ok; ++j)
      ok = table.trajectory[k + j] == table.trajectory[k] && table.start[k + j] == table.start[k] + j * stride;
    if (ok) out.push_back(k);
  }
  return out;
}

void SplitSpec::validate() const {
  if (train_count == 0 || test_count == 0 || rul_supervision_count == 0)
    throw std::invalid_argument("split: counts must be positive");
  if (rul_supervision_count > train_count)
    throw std::invalid_argument("split: rul_supervision_count exceeds train_count");
}

Split split(std::size_t fleet_size, const SplitSpec& spec, std::uint64_t seed) {
  spec.validate();
  if (fleet_size < spec.train_count + spec.test_count)
    throw DataError("split: fleet of " + std::to_string(fleet_size) + " cannot provide " +
                    std::to_string(spec.train_count) + " train + " + std::to_string(spec.test_count) + " test");
  std::vector<std::size_t> order(fleet_size);
  for (std::size_t i = 0; i < fleet_size; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  Split s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(spec.train_count));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(spec.train_count),
                order.begin() + static_cast<std::ptrdiff_t>(spec.train_count + spec.test_count));
  s.supervision.assign(s.train.begin(), s.train.begin() + static_cast<std::ptrdiff_t>(spec.rul_supervision_count));
  return s;
}

}  // namespace kprog::data
