#pragma once

// Minute-resolution wearable data and the canonical CSV format
// (header `timestamp,heart_rate,steps`, empty cell = missing).

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace circadian {

/// One minute of wearable data. `minute` counts minutes from local midnight of
/// the first recorded day.
struct WearableRecord {
  std::int64_t minute = 0;
  std::optional<double> hr;
  std::optional<double> steps;
};

struct GapRun {
  std::int64_t start_minute = 0;
  std::int64_t length = 0;
};

struct GapReport {
  std::size_t minutes = 0;
  std::size_t missing_hr = 0;
  std::size_t missing_steps = 0;
  std::vector<GapRun> hr_gaps;
};

struct IngestResult {
  /// Dense 1-minute grid from minute 0 (midnight of the first day) to the last
  /// recorded minute; minutes without data carry missing markers.
  std::vector<WearableRecord> records;
  GapReport gaps;
  /// Calendar date of minute 0 as YYYY-MM-DD, when timestamps were ISO-8601.
  std::optional<std::string> start_date;
};

/// Parses the canonical CSV. Timestamps are ISO-8601 local times
/// (YYYY-MM-DDTHH:MM[:SS]) or minutes from the start of the record. Samples are
/// left-aligned to the minute; several samples in one minute average HR and
/// sum steps. Throws ValidationError with the offending line number.
IngestResult ingest_csv(std::istream& in);
IngestResult ingest_csv_file(const std::string& path);

/// Writes records in the canonical format. With `start_date` set (YYYY-MM-DD)
/// timestamps are ISO-8601, otherwise minutes from start.
void write_csv(std::ostream& out, const std::vector<WearableRecord>& records,
               const std::optional<std::string>& start_date = std::nullopt);
void write_csv_file(const std::string& path, const std::vector<WearableRecord>& records,
                    const std::optional<std::string>& start_date = std::nullopt);

GapReport gap_report(const std::vector<WearableRecord>& records);

}  // namespace circadian
