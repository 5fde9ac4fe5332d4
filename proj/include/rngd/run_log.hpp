#pragma once

// Per-epoch run logs: a `#`-prefixed JSON metadata line, a column header and
// one CSV record per epoch. Records are flushed one by one into `<path>.tmp`,
// which is renamed over `path` on commit.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "rngd/optim.hpp"

namespace rngd {

/// Writes `text` to `path.tmp` and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

/// Shortest round-trip formatting ("%.17g"); nan/inf spelled out.
std::string format_double(double v);

struct LogRecord {
  int epoch;
  double grad_per_n;
  double train;
  double test;
  double sigma;
  double seconds;
};

class RunLogWriter {
 public:
  RunLogWriter(std::filesystem::path path, const nlohmann::json& meta);
  RunLogWriter(const RunLogWriter&) = delete;
  RunLogWriter& operator=(const RunLogWriter&) = delete;

  /// Epochs must be strictly increasing; train must be finite.
  void append(const LogRecord& rec);
  /// Moves the temporary file into place. Without a commit the partial log
  /// stays at `path.tmp`.
  void commit();

 private:
  std::filesystem::path path_;
  std::filesystem::path tmp_;
  std::ofstream out_;
  int last_epoch_ = -1;
  bool committed_ = false;
};

struct RunLog {
  nlohmann::json meta;
  std::vector<LogRecord> records;
};

/// Reads a log written by RunLogWriter; a truncated last line is dropped.
RunLog read_run_log(const std::filesystem::path& path);

/// Converts an optimizer trace; seconds are zero unless `seconds` is given.
std::vector<LogRecord> to_log_records(const Trace& trace, const std::vector<double>& seconds = {});

}  // namespace rngd
