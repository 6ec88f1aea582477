#pragma once

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "evcharge/csv.hpp"
#include "evcharge/error.hpp"

namespace evcharge {

// ISO 8601 timestamp. The wall-clock reading is kept exactly as written in
// the file; the UTC offset, when present, is only used to compute elapsed
// time between two timestamps.
struct timestamp {
  std::int64_t local_ms_{0};  // wall-clock milliseconds since 1970-01-01T00:00
  std::optional<std::int32_t> utc_offset_min_;

  static constexpr std::int64_t kMsPerDay = 86'400'000;

  std::int64_t absolute_ms() const {
    return local_ms_ - std::int64_t{utc_offset_min_.value_or(0)} * 60'000;
  }

  std::chrono::sys_days local_date() const {
    auto days = local_ms_ / kMsPerDay;
    if (local_ms_ % kMsPerDay < 0) {
      --days;
    }
    return std::chrono::sys_days{std::chrono::days{days}};
  }

  std::int64_t ms_of_day() const {
    auto const r = local_ms_ % kMsPerDay;
    return r < 0 ? r + kMsPerDay : r;
  }

  // Local wall-clock hour in [0, 24).
  int hour_of_day() const { return static_cast<int>(ms_of_day() / 3'600'000); }

  static timestamp from_local(std::chrono::sys_days date, std::int64_t ms_of_day,
                              std::optional<std::int32_t> offset = {}) {
    return {date.time_since_epoch().count() * kMsPerDay + ms_of_day, offset};
  }

  friend bool operator==(timestamp const&, timestamp const&) = default;
};

namespace detail {

template <typename T>
bool parse_number(std::string_view s, T& out) {
  s = csv::trim(s);
  if (!s.empty() && s.front() == '+') {
    s.remove_prefix(1);
  }
  if (s.empty()) {
    return false;
  }
  auto const [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

inline bool parse_fixed_int(std::string_view s, std::size_t pos, std::size_t len,
                            int& out) {
  if (pos + len > s.size()) {
    return false;
  }
  out = 0;
  for (auto i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') {
      return false;
    }
    out = out * 10 + (s[i] - '0');
  }
  return true;
}

}  // namespace detail

// Accepts YYYY-MM-DD[T ]HH:MM[:SS[.fff]][Z|±HH:MM|±HHMM].
inline std::optional<timestamp> parse_timestamp(std::string_view s) {
  using namespace std::chrono;
  s = csv::trim(s);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  if (!detail::parse_fixed_int(s, 0, 4, y) || s.size() < 16 || s[4] != '-' ||
      !detail::parse_fixed_int(s, 5, 2, mo) || s[7] != '-' ||
      !detail::parse_fixed_int(s, 8, 2, d) || (s[10] != 'T' && s[10] != ' ') ||
      !detail::parse_fixed_int(s, 11, 2, h) || s[13] != ':' ||
      !detail::parse_fixed_int(s, 14, 2, mi)) {
    return std::nullopt;
  }
  std::size_t pos = 16;
  std::int64_t ms = 0;
  if (pos < s.size() && s[pos] == ':') {
    if (!detail::parse_fixed_int(s, pos + 1, 2, sec)) {
      return std::nullopt;
    }
    pos += 3;
    if (pos < s.size() && (s[pos] == '.' || s[pos] == ',')) {
      ++pos;
      auto scale = 100;
      auto digits = 0;
      while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
        ms += (s[pos] - '0') * scale;
        scale /= 10;
        ++pos;
        ++digits;
      }
      if (digits == 0) {
        return std::nullopt;
      }
    }
  }
  std::optional<std::int32_t> offset;
  if (pos < s.size()) {
    if (s[pos] == 'Z' && pos + 1 == s.size()) {
      offset = 0;
    } else if (s[pos] == '+' || s[pos] == '-') {
      int oh = 0, om = 0;
      auto const rest = s.size() - pos - 1;
      bool ok = false;
      if (rest == 5 && s[pos + 3] == ':') {
        ok = detail::parse_fixed_int(s, pos + 1, 2, oh) &&
             detail::parse_fixed_int(s, pos + 4, 2, om);
      } else if (rest == 4) {
        ok = detail::parse_fixed_int(s, pos + 1, 2, oh) &&
             detail::parse_fixed_int(s, pos + 3, 2, om);
      } else if (rest == 2) {
        ok = detail::parse_fixed_int(s, pos + 1, 2, oh);
      }
      if (!ok || oh > 23 || om > 59) {
        return std::nullopt;
      }
      offset = (s[pos] == '-' ? -1 : 1) * (oh * 60 + om);
    } else {
      return std::nullopt;
    }
  }
  auto const date = year{y} / month{static_cast<unsigned>(mo)} /
                    day{static_cast<unsigned>(d)};
  if (!date.ok() || h > 23 || mi > 59 || sec > 59) {
    return std::nullopt;
  }
  return timestamp::from_local(
      sys_days{date}, ((h * 60LL + mi) * 60LL + sec) * 1000LL + ms, offset);
}

inline std::string format_timestamp(timestamp const& t) {
  using namespace std::chrono;
  year_month_day const ymd{t.local_date()};
  auto const ms = t.ms_of_day();
  char buf[64];
  auto n = std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d",
                         static_cast<int>(ymd.year()),
                         static_cast<unsigned>(ymd.month()),
                         static_cast<unsigned>(ymd.day()),
                         static_cast<int>(ms / 3'600'000),
                         static_cast<int>(ms / 60'000 % 60),
                         static_cast<int>(ms / 1000 % 60));
  std::string out(buf, static_cast<std::size_t>(n));
  if (ms % 1000 != 0) {
    std::snprintf(buf, sizeof(buf), ".%03d", static_cast<int>(ms % 1000));
    out += buf;
  }
  if (t.utc_offset_min_) {
    auto const off = *t.utc_offset_min_;
    auto const a = off < 0 ? -off : off;
    std::snprintf(buf, sizeof(buf), "%c%02d:%02d", off < 0 ? '-' : '+', a / 60,
                  a % 60);
    out += buf;
  }
  return out;
}

// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto const [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

struct transaction {
  std::string station_id_;
  double latitude_{0.0};
  double longitude_{0.0};
  timestamp arrival_;
  double duration_s_{0.0};

  double duration_hours() const { return duration_s_ / 3600.0; }

  friend bool operator==(transaction const&, transaction const&) = default;
};

// Column names of the input table. A duration column takes precedence over a
// departure column; at least one of the two must exist.
struct schema {
  std::string station_id_{"station_id"};
  std::string latitude_{"latitude"};
  std::string longitude_{"longitude"};
  std::string arrival_{"arrival_time"};
  std::string duration_{"duration_seconds"};
  std::string departure_{"departure_time"};
};

struct rejection {
  std::size_t line_{0};  // 1-based physical line, header is line 1
  std::string reason_;

  friend bool operator==(rejection const&, rejection const&) = default;
};

struct parse_result {
  std::vector<transaction> transactions_;
  std::vector<rejection> rejections_;
  std::size_t rows_{0};  // non-blank data rows seen
};

// Maximum tolerated disagreement between a duration column and
// departure − arrival.
constexpr double kDurationMismatchToleranceS = 1.0;

inline parse_result parse_transactions(std::istream& in,
                                       schema const& cols = {}) {
  std::string line;
  if (!csv::read_line(in, line)) {
    throw data_error{"input is empty: missing header row"};
  }
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
    line.erase(0, 3);
  }
  auto const header = csv::split_line(line);
  auto const find = [&](std::string const& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (csv::trim(header[i]) == name) {
        return i;
      }
    }
    return std::nullopt;
  };
  auto const require = [&](std::string const& name) {
    auto const idx = find(name);
    if (!idx) {
      throw data_error{"missing required column '" + name + "'"};
    }
    return *idx;
  };
  auto const station_col = require(cols.station_id_);
  auto const lat_col = require(cols.latitude_);
  auto const lon_col = require(cols.longitude_);
  auto const arrival_col = require(cols.arrival_);
  auto const duration_col = find(cols.duration_);
  auto const departure_col = find(cols.departure_);
  if (!duration_col && !departure_col) {
    throw data_error{"missing required column '" + cols.duration_ + "' (or '" +
                     cols.departure_ + "')"};
  }

  parse_result result;
  std::size_t line_no = 1;
  while (csv::read_line(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) {
      continue;
    }
    ++result.rows_;
    auto const reject = [&](std::string reason) {
      result.rejections_.push_back({line_no, std::move(reason)});
    };
    auto const fields = csv::split_line(line);
    if (fields.size() != header.size()) {
      reject("expected " + std::to_string(header.size()) + " fields, got " +
             std::to_string(fields.size()));
      continue;
    }

    transaction tx;
    tx.station_id_ = std::string{csv::trim(fields[station_col])};
    if (tx.station_id_.empty()) {
      reject("empty station_id");
      continue;
    }
    if (!detail::parse_number(fields[lat_col], tx.latitude_) ||
        !std::isfinite(tx.latitude_)) {
      reject("unparseable latitude");
      continue;
    }
    if (tx.latitude_ < -90.0 || tx.latitude_ > 90.0) {
      reject("latitude out of range");
      continue;
    }
    if (!detail::parse_number(fields[lon_col], tx.longitude_) ||
        !std::isfinite(tx.longitude_)) {
      reject("unparseable longitude");
      continue;
    }
    if (tx.longitude_ < -180.0 || tx.longitude_ > 180.0) {
      reject("longitude out of range");
      continue;
    }
    auto const arrival = parse_timestamp(fields[arrival_col]);
    if (!arrival) {
      reject("unparseable arrival timestamp");
      continue;
    }
    tx.arrival_ = *arrival;

    std::optional<double> from_departure;
    if (departure_col && !csv::trim(fields[*departure_col]).empty()) {
      auto const dep = parse_timestamp(fields[*departure_col]);
      if (!dep) {
        reject("unparseable departure timestamp");
        continue;
      }
      from_departure =
          static_cast<double>(dep->absolute_ms() - arrival->absolute_ms()) /
          1000.0;
    }
    std::optional<double> from_duration;
    if (duration_col && !csv::trim(fields[*duration_col]).empty()) {
      double v = 0.0;
      if (!detail::parse_number(fields[*duration_col], v) || !std::isfinite(v)) {
        reject("unparseable duration");
        continue;
      }
      from_duration = v;
    }
    if (!from_duration && !from_departure) {
      reject("missing duration and departure");
      continue;
    }
    if (from_duration && from_departure &&
        std::abs(*from_duration - *from_departure) >
            kDurationMismatchToleranceS) {
      reject("duration disagrees with departure time");
      continue;
    }
    tx.duration_s_ = from_duration ? *from_duration : *from_departure;
    if (tx.duration_s_ < 0.0) {
      reject("negative duration");
      continue;
    }
    result.transactions_.push_back(std::move(tx));
  }
  return result;
}

// Writes transactions in the default schema (duration column form).
inline void write_transactions(std::ostream& out,
                               std::vector<transaction> const& txs) {
  out << "station_id,latitude,longitude,arrival_time,duration_seconds\n";
  for (auto const& tx : txs) {
    out << csv::escape(tx.station_id_) << ',' << format_double(tx.latitude_)
        << ',' << format_double(tx.longitude_) << ','
        << format_timestamp(tx.arrival_) << ',' << format_double(tx.duration_s_)
        << '\n';
  }
}

inline void write_rejections(std::ostream& out,
                             std::vector<rejection> const& rejections) {
  out << "line,reason\n";
  for (auto const& r : rejections) {
    out << r.line_ << ',' << csv::escape(r.reason_) << '\n';
  }
}

// Half-open date range [start, end) on the local wall-clock arrival time.
class period_filter {
public:
  period_filter(std::chrono::sys_days start, std::chrono::sys_days end)
      : start_{start}, end_{end} {
    if (!(start < end)) {
      throw config_error{"period start must be before period end"};
    }
  }

  std::chrono::sys_days start() const { return start_; }
  std::chrono::sys_days end() const { return end_; }

  bool contains(timestamp const& t) const {
    auto const lo = timestamp::from_local(start_, 0).local_ms_;
    auto const hi = timestamp::from_local(end_, 0).local_ms_;
    return lo <= t.local_ms_ && t.local_ms_ < hi;
  }

private:
  std::chrono::sys_days start_, end_;
};

inline std::optional<std::chrono::sys_days> parse_date(std::string_view s) {
  using namespace std::chrono;
  s = csv::trim(s);
  int y = 0, m = 0, d = 0;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-' ||
      !detail::parse_fixed_int(s, 0, 4, y) ||
      !detail::parse_fixed_int(s, 5, 2, m) ||
      !detail::parse_fixed_int(s, 8, 2, d)) {
    return std::nullopt;
  }
  auto const ymd =
      year{y} / month{static_cast<unsigned>(m)} / day{static_cast<unsigned>(d)};
  if (!ymd.ok()) {
    return std::nullopt;
  }
  return sys_days{ymd};
}

inline std::vector<transaction> filter_period(std::vector<transaction> txs,
                                              period_filter const& f) {
  std::erase_if(txs, [&](transaction const& tx) { return !f.contains(tx.arrival_); });
  return txs;
}

}  // namespace evcharge
