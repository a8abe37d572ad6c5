#include "shaftpower/records.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>

#include <fmt/format.h>
#include <fmt/os.h>

#include "shaftpower/errors.hpp"

namespace shaftpower::data {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

struct RowFailure {
  std::string message;
};

double parse_real(std::string_view field, std::string_view column) {
  double value = 0.0;
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc{} || ptr != end || !std::isfinite(value)) {
    throw RowFailure{fmt::format("column '{}': '{}' is not a finite number", column, field)};
  }
  return value;
}

/// Maps column names to positions and checks the required ones are present.
class Header {
 public:
  Header(std::string_view line, const std::vector<std::string>& required, const std::string& path) {
    const auto names = split_fields(line);
    for (std::size_t i = 0; i < names.size(); ++i) index_.emplace(std::string(names[i]), i);
    for (const auto& name : required) {
      if (!index_.contains(name)) {
        throw DataError(fmt::format("{}: missing required column '{}'", path, name));
      }
    }
  }
  bool has(const std::string& name) const { return index_.contains(name); }
  std::size_t at(const std::string& name) const { return index_.at(name); }
  std::size_t width() const { return index_.size(); }

 private:
  std::map<std::string, std::size_t> index_;
};

template <typename Record, typename ParseRow>
IngestResult<Record> load_csv(const std::string& path, const std::vector<std::string>& required,
                              ParseRow parse_row) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path));
  std::string line;
  if (!std::getline(in, line)) throw DataError(fmt::format("{}: file is empty, no header", path));
  const Header header(line, required, path);

  IngestResult<Record> result;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    try {
      if (fields.size() != header.width()) {
        throw RowFailure{fmt::format("expected {} fields, found {}", header.width(), fields.size())};
      }
      const Record* previous = result.records.empty() ? nullptr : &result.records.back();
      result.records.push_back(parse_row(header, fields, previous));
    } catch (const RowFailure& f) {
      result.rejects.push_back({line_no, f.message});
    } catch (const DataError& e) {
      result.rejects.push_back({line_no, e.what()});
    }
  }
  if (result.records.empty() && result.rejects.empty()) {
    result.warnings.push_back(fmt::format("{}: no data rows", path));
  }
  return result;
}

double field(const Header& h, const std::vector<std::string_view>& f, const std::string& name) {
  return parse_real(f[h.at(name)], name);
}

std::optional<double> optional_field(const Header& h, const std::vector<std::string_view>& f,
                                     const std::string& name) {
  if (!h.has(name)) return std::nullopt;
  const auto text = f[h.at(name)];
  if (text.empty()) return std::nullopt;
  return parse_real(text, name);
}

std::string real(double v) { return fmt::format("{:.17g}", v); }

template <typename Record>
Preprocessed<Record> preprocess_impl(std::span<const Record> records, const PreprocessOptions& o) {
  Preprocessed<Record> out;
  for (const auto& r : records) {
    std::size_t* rule = nullptr;
    if (r.stw_knots < o.min_stw_knots) {
      rule = &out.report.low_speed;
    } else if (r.rpm < o.min_rpm) {
      rule = &out.report.low_rpm;
    } else if (r.shaft_power_kw < o.min_power_kw) {
      rule = &out.report.low_power;
    } else if (o.apply_power_outlier_cut && r.shaft_power_kw > o.max_power_kw) {
      rule = &out.report.power_outlier;
    }
    if (rule != nullptr) {
      ++*rule;
      out.dropped.push_back(r);
    } else {
      out.kept.push_back(r);
    }
  }
  return out;
}

template <typename Record>
Split<Record> split_impl(std::span<const Record> records, const SplitSpec& spec) {
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].time() < records[i - 1].time()) {
      throw ConfigError("temporal split requires time-ordered records");
    }
  }
  const auto boundary = std::partition_point(
      records.begin(), records.end(), [&](const Record& r) { return r.time() < spec.train_end; });
  Split<Record> out{{records.begin(), boundary}, {boundary, records.end()}};
  if (out.train.empty() || out.test.empty()) {
    throw ConfigError(fmt::format("split boundary {} leaves {} train and {} test rows",
                                  format_iso8601(spec.train_end), out.train.size(),
                                  out.test.size()));
  }
  return out;
}

}  // namespace

std::string to_string(VesselCategory c) {
  switch (c) {
    case VesselCategory::kSister: return "sister";
    case VesselCategory::kSimilar: return "similar";
    case VesselCategory::kDifferent: return "different";
  }
  return "unknown";
}

VesselCategory parse_category(const std::string& text) {
  if (text == "sister") return VesselCategory::kSister;
  if (text == "similar") return VesselCategory::kSimilar;
  if (text == "different") return VesselCategory::kDifferent;
  throw ConfigError(fmt::format("unknown vessel category '{}'", text));
}

IngestResult<SensorRecord> load_sensor_csv(const std::string& path) {
  return load_csv<SensorRecord>(
      path, kSensorColumns,
      [](const Header& h, const std::vector<std::string_view>& f, const SensorRecord* prev) {
        SensorRecord r;
        r.timestamp = parse_iso8601(f[h.at("timestamp")]);
        r.stw_knots = field(h, f, "stw_knots");
        r.rpm = field(h, f, "rpm");
        r.draft_aft_m = field(h, f, "draft_aft_m");
        r.draft_fore_m = field(h, f, "draft_fore_m");
        r.lat_deg = field(h, f, "lat_deg");
        r.lon_deg = field(h, f, "lon_deg");
        r.course_deg = field(h, f, "course_deg");
        r.shaft_power_kw = field(h, f, "shaft_power_kw");
        r.wave_height_m = optional_field(h, f, "wave_height_m");
        r.swell_height_m = optional_field(h, f, "swell_height_m");
        r.wave_dir_rel_deg = optional_field(h, f, "wave_dir_rel_deg");
        r.wind_dir_rel_deg = optional_field(h, f, "wind_dir_rel_deg");
        if (r.lat_deg < -90.0 || r.lat_deg > 90.0) throw RowFailure{"lat_deg outside [-90, 90]"};
        if (r.lon_deg < -180.0 || r.lon_deg > 180.0) throw RowFailure{"lon_deg outside [-180, 180]"};
        if (r.course_deg < 0.0 || r.course_deg >= 360.0) throw RowFailure{"course_deg outside [0, 360)"};
        if (prev != nullptr && r.timestamp <= prev->timestamp) {
          throw RowFailure{"timestamp not strictly increasing"};
        }
        return r;
      });
}

IngestResult<NoonReport> load_noon_csv(const std::string& path) {
  return load_csv<NoonReport>(
      path, kNoonColumns,
      [](const Header& h, const std::vector<std::string_view>& f, const NoonReport* prev) {
        NoonReport r;
        r.date = parse_date(f[h.at("date")]);
        r.stw_knots = field(h, f, "stw_knots");
        r.rpm = field(h, f, "rpm");
        r.draft_aft_m = field(h, f, "draft_aft_m");
        r.draft_fore_m = field(h, f, "draft_fore_m");
        r.wave_height_m = field(h, f, "wave_height_m");
        r.swell_height_m = field(h, f, "swell_height_m");
        r.wave_dir_rel_deg = field(h, f, "wave_dir_rel_deg");
        r.wind_dir_rel_deg = field(h, f, "wind_dir_rel_deg");
        r.shaft_power_kw = field(h, f, "shaft_power_kw");
        if (r.wave_height_m < 0.0 || r.swell_height_m < 0.0) throw RowFailure{"negative height"};
        if (prev != nullptr && r.date <= prev->date) throw RowFailure{"more than one report per day"};
        return r;
      });
}

void write_sensor_csv(const std::string& path, std::span<const SensorRecord> records) {
  const bool fused = !records.empty() && std::all_of(records.begin(), records.end(), [](const auto& r) {
    return r.wave_height_m && r.swell_height_m && r.wave_dir_rel_deg && r.wind_dir_rel_deg;
  });
  auto out = fmt::output_file(path);
  out.print("{}", fmt::join(kSensorColumns, ","));
  if (fused) out.print(",{}", fmt::join(kFusedColumns, ","));
  out.print("\n");
  for (const auto& r : records) {
    out.print("{},{},{},{},{},{},{},{},{}", format_iso8601(r.timestamp), real(r.stw_knots),
              real(r.rpm), real(r.draft_aft_m), real(r.draft_fore_m), real(r.lat_deg),
              real(r.lon_deg), real(r.course_deg), real(r.shaft_power_kw));
    if (fused) {
      out.print(",{},{},{},{}", real(*r.wave_height_m), real(*r.swell_height_m),
                real(*r.wave_dir_rel_deg), real(*r.wind_dir_rel_deg));
    }
    out.print("\n");
  }
}

void write_noon_csv(const std::string& path, std::span<const NoonReport> records) {
  auto out = fmt::output_file(path);
  out.print("{}\n", fmt::join(kNoonColumns, ","));
  for (const auto& r : records) {
    out.print("{},{},{},{},{},{},{},{},{},{}\n", format_date(r.date), real(r.stw_knots),
              real(r.rpm), real(r.draft_aft_m), real(r.draft_fore_m), real(r.wave_height_m),
              real(r.swell_height_m), real(r.wave_dir_rel_deg), real(r.wind_dir_rel_deg),
              real(r.shaft_power_kw));
  }
}

Preprocessed<SensorRecord> preprocess(std::span<const SensorRecord> records,
                                      const PreprocessOptions& options) {
  return preprocess_impl(records, options);
}

Preprocessed<NoonReport> preprocess(std::span<const NoonReport> records,
                                    const PreprocessOptions& options) {
  return preprocess_impl(records, options);
}

Split<SensorRecord> temporal_split(std::span<const SensorRecord> records, const SplitSpec& spec) {
  return split_impl(records, spec);
}

Split<NoonReport> temporal_split(std::span<const NoonReport> records, const SplitSpec& spec) {
  return split_impl(records, spec);
}

}  // namespace shaftpower::data
