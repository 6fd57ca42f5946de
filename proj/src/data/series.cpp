#include "kprog/data/series.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace kprog::data {

std::size_t TimeSeries::channel_index(const std::string& name) const {
  const auto it = std::find(channel_names.begin(), channel_names.end(), name);
  if (it == channel_names.end()) throw DataError("series '" + id + "' has no channel '" + name + "'");
  return static_cast<std::size_t>(it - channel_names.begin());
}

TimeSeries to_series(const battery::Trajectory& t, std::string id) {
  TimeSeries s;
  s.id = std::move(id);
  s.time = t.time;
  s.channel_names = {"voltage_v", "temperature_k", "current_a"};
  s.channels = {t.voltage, t.temperature, t.current};
  if (t.reached_eol) s.eol_time = t.eol_time;
  return s;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_number(const std::string& text, const std::filesystem::path& path, std::size_t line) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE)
    throw DataError(path.string() + ":" + std::to_string(line) + ": not a number: '" + text + "'");
  return v;
}

}  // namespace

TimeSeries read_series_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  const auto header = split_csv_line(line);

  const auto time_it = std::find(header.begin(), header.end(), "time_s");
  if (time_it == header.end()) throw DataError(path.string() + ": missing time_s column");
  const std::size_t time_col = static_cast<std::size_t>(time_it - header.begin());
  std::optional<std::size_t> rul_col;
  if (auto it = std::find(header.begin(), header.end(), "rul_norm"); it != header.end())
    rul_col = static_cast<std::size_t>(it - header.begin());

  TimeSeries s;
  s.id = path.stem().string();
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == time_col || (rul_col && c == *rul_col)) continue;
    feature_cols.push_back(c);
    s.channel_names.push_back(header[c]);
  }
  s.channels.resize(feature_cols.size());
  std::vector<double> rul;

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
    s.time.push_back(parse_number(fields[time_col], path, line_no));
    for (std::size_t k = 0; k < feature_cols.size(); ++k)
      s.channels[k].push_back(parse_number(fields[feature_cols[k]], path, line_no));
    if (rul_col) rul.push_back(parse_number(fields[*rul_col], path, line_no));
  }
  if (s.time.empty()) throw DataError(path.string() + ": no data rows");
  if (rul_col) s.rul = std::move(rul);
  if (std::find(header.begin(), header.end(), "capacity_frac") != header.end()) s.eol_time = s.time.back();
  return s;
}

std::vector<double> label_rul(const TimeSeries& s) {
  if (s.rul) return *s.rul;
  if (!s.eol_time || !(*s.eol_time > 0.0))
    throw DataError("series '" + s.id + "' has no end-of-life marker; cannot label RUL");
  std::vector<double> out(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) out[k] = (*s.eol_time - s.time[k]) / *s.eol_time;
  return out;
}

std::vector<double> label_rul(const battery::Trajectory& t) {
  if (!t.reached_eol) throw DataError("trajectory did not reach end of life; cannot label RUL");
  return label_rul(to_series(t));
}

}  // namespace kprog::data
