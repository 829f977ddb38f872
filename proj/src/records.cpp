#include "circadian/records.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "circadian/errors.hpp"

namespace circadian {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw ValidationError("line " + std::to_string(line) + ": " + what);
}

std::optional<double> parse_number(std::string_view cell, std::size_t line, const char* field) {
  cell = trim(cell);
  if (cell.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
    fail(line, std::string("malformed ") + field + " '" + std::string(cell) + "'");
  }
  if (v < 0.0) fail(line, std::string(field) + " must be non-negative");
  return v;
}

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

struct Timestamp {
  std::optional<std::chrono::sys_days> date;  // set for ISO input
  double seconds = 0.0;                       // since date midnight, or since record start
};

std::optional<std::chrono::sys_days> parse_date(std::string_view s) {
  int y = 0, m = 0, d = 0;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  if (!parse_int(s.substr(0, 4), y) || !parse_int(s.substr(5, 2), m) ||
      !parse_int(s.substr(8, 2), d)) {
    return std::nullopt;
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y},
                                        std::chrono::month{static_cast<unsigned>(m)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return std::chrono::sys_days{ymd};
}

Timestamp parse_timestamp(std::string_view cell, std::size_t line) {
  cell = trim(cell);
  if (cell.empty()) fail(line, "missing timestamp");
  Timestamp ts;
  const auto t = cell.find('T');
  if (t == std::string_view::npos) {
    double minutes = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), minutes);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(minutes)) {
      fail(line, "malformed timestamp '" + std::string(cell) + "'");
    }
    if (minutes < 0.0) fail(line, "negative timestamp");
    ts.seconds = minutes * 60.0;
    return ts;
  }
  ts.date = parse_date(cell.substr(0, t));
  if (!ts.date) fail(line, "malformed date in '" + std::string(cell) + "'");
  const std::string_view clock = cell.substr(t + 1);
  int hh = 0, mm = 0, ss = 0;
  bool ok = clock.size() >= 5 && clock[2] == ':' && parse_int(clock.substr(0, 2), hh) &&
            parse_int(clock.substr(3, 2), mm);
  if (ok && clock.size() > 5) {
    ok = clock.size() == 8 && clock[5] == ':' && parse_int(clock.substr(6, 2), ss);
  }
  if (!ok || hh > 23 || mm > 59 || ss > 59 || hh < 0 || mm < 0 || ss < 0) {
    fail(line, "malformed time in '" + std::string(cell) + "'");
  }
  ts.seconds = hh * 3600.0 + mm * 60.0 + ss;
  return ts;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string format_date(std::chrono::sys_days d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

struct Accum {
  double hr_sum = 0.0;
  int hr_n = 0;
  double steps_sum = 0.0;
  int steps_n = 0;
};

}  // namespace

IngestResult ingest_csv(std::istream& in) {
  std::string raw;
  std::size_t line = 0;
  bool header_seen = false;
  std::optional<bool> iso;
  std::optional<std::chrono::sys_days> first_date;
  double last_seconds = -1.0;
  std::map<std::int64_t, Accum> minutes;

  while (std::getline(in, raw)) {
    ++line;
    const std::string_view row = trim(raw);
    if (row.empty()) continue;
    if (!header_seen) {
      std::string_view r = row;
      if (r.size() >= 3 && static_cast<unsigned char>(r[0]) == 0xEF) r.remove_prefix(3);  // BOM
      if (r != "timestamp,heart_rate,steps") {
        fail(line, "expected header 'timestamp,heart_rate,steps'");
      }
      header_seen = true;
      continue;
    }
    const auto c1 = row.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : row.find(',', c1 + 1);
    if (c2 == std::string_view::npos || row.find(',', c2 + 1) != std::string_view::npos) {
      fail(line, "expected 3 comma-separated fields");
    }
    const Timestamp ts = parse_timestamp(row.substr(0, c1), line);
    const bool is_iso = ts.date.has_value();
    if (!iso) iso = is_iso;
    if (*iso != is_iso) fail(line, "mixed timestamp formats");

    double seconds = ts.seconds;
    if (is_iso) {
      if (!first_date) first_date = ts.date;
      seconds += static_cast<double>((*ts.date - *first_date).count()) * 86400.0;
    }
    if (!(seconds > last_seconds)) fail(line, "timestamps must be strictly increasing");
    last_seconds = seconds;

    Accum& a = minutes[static_cast<std::int64_t>(std::floor(seconds / 60.0))];
    if (auto hr = parse_number(row.substr(c1 + 1, c2 - c1 - 1), line, "heart_rate")) {
      a.hr_sum += *hr;
      ++a.hr_n;
    }
    if (auto st = parse_number(row.substr(c2 + 1), line, "steps")) {
      a.steps_sum += *st;
      ++a.steps_n;
    }
  }
  if (!header_seen) throw ValidationError("empty input: no header");
  if (minutes.empty()) throw ValidationError("input contains no data rows");

  IngestResult result;
  const std::int64_t last = minutes.rbegin()->first;
  result.records.resize(static_cast<std::size_t>(last + 1));
  for (std::int64_t m = 0; m <= last; ++m) result.records[static_cast<std::size_t>(m)].minute = m;
  for (const auto& [m, a] : minutes) {
    auto& r = result.records[static_cast<std::size_t>(m)];
    if (a.hr_n > 0) r.hr = a.hr_n == 1 ? a.hr_sum : a.hr_sum / a.hr_n;
    if (a.steps_n > 0) r.steps = a.steps_sum;
  }
  if (first_date) result.start_date = format_date(*first_date);
  result.gaps = gap_report(result.records);
  return result;
}

IngestResult ingest_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return ingest_csv(in);
}

void write_csv(std::ostream& out, const std::vector<WearableRecord>& records,
               const std::optional<std::string>& start_date) {
  std::optional<std::chrono::sys_days> base;
  if (start_date) {
    base = parse_date(*start_date);
    if (!base) throw ValidationError("start date must be YYYY-MM-DD");
  }
  out << "timestamp,heart_rate,steps\n";
  for (const auto& r : records) {
    if (base) {
      const std::int64_t day = r.minute >= 0 ? r.minute / 1440 : (r.minute - 1439) / 1440;
      const std::int64_t mod = r.minute - day * 1440;
      char clock[8];
      std::snprintf(clock, sizeof(clock), "%02d:%02d", static_cast<int>(mod / 60),
                    static_cast<int>(mod % 60));
      out << format_date(*base + std::chrono::days{day}) << 'T' << clock;
    } else {
      out << r.minute;
    }
    out << ',';
    if (r.hr) out << format_double(*r.hr);
    out << ',';
    if (r.steps) out << format_double(*r.steps);
    out << '\n';
  }
}

void write_csv_file(const std::string& path, const std::vector<WearableRecord>& records,
                    const std::optional<std::string>& start_date) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  write_csv(out, records, start_date);
  if (!out) throw ValidationError("write to '" + path + "' failed");
}

GapReport gap_report(const std::vector<WearableRecord>& records) {
  GapReport g;
  g.minutes = records.size();
  std::optional<GapRun> run;
  for (const auto& r : records) {
    if (!r.steps) ++g.missing_steps;
    if (!r.hr) {
      ++g.missing_hr;
      if (run) {
        ++run->length;
      } else {
        run = GapRun{r.minute, 1};
      }
    } else if (run) {
      g.hr_gaps.push_back(*run);
      run.reset();
    }
  }
  if (run) g.hr_gaps.push_back(*run);
  return g;
}

}  // namespace circadian
