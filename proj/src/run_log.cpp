#include "rngd/run_log.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "rngd/error.hpp"

namespace rngd {

namespace {

constexpr const char* kColumns = "epoch,grad_per_n,train,test,sigma,seconds";

std::filesystem::path tmp_path(const std::filesystem::path& path) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  return tmp;
}

double parse_field(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument(s);
  return v;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = tmp_path(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

RunLogWriter::RunLogWriter(std::filesystem::path path, const nlohmann::json& meta)
    : path_(std::move(path)), tmp_(tmp_path(path_)) {
  out_.open(tmp_, std::ios::binary | std::ios::trunc);
  if (!out_) throw DataError("cannot write " + tmp_.string());
  out_ << "# " << meta.dump() << '\n' << kColumns << '\n';
  out_.flush();
}

void RunLogWriter::append(const LogRecord& rec) {
  if (committed_) throw ContractViolation("run log already committed");
  if (rec.epoch <= last_epoch_) throw ContractViolation("run log epochs must be strictly increasing");
  if (!std::isfinite(rec.train)) throw NumericalError("non-finite training metric at epoch " +
                                                      std::to_string(rec.epoch));
  last_epoch_ = rec.epoch;
  out_ << rec.epoch << ',' << format_double(rec.grad_per_n) << ',' << format_double(rec.train) << ','
       << format_double(rec.test) << ',' << format_double(rec.sigma) << ',' << format_double(rec.seconds)
       << '\n';
  out_.flush();
  if (!out_) throw DataError("write failed for " + tmp_.string());
}

void RunLogWriter::commit() {
  if (committed_) return;
  out_.close();
  std::filesystem::rename(tmp_, path_);
  committed_ = true;
}

RunLog read_run_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  RunLog log;
  std::istringstream lines(text);
  std::string line;
  if (!std::getline(lines, line) || line.rfind("# ", 0) != 0) {
    throw DataError(path.string() + ": missing metadata line");
  }
  try {
    log.meta = nlohmann::json::parse(line.substr(2));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": bad metadata: " + e.what());
  }
  if (!std::getline(lines, line) || line != kColumns) throw DataError(path.string() + ": bad column header");
  // A record is complete only if it ends with a newline.
  std::size_t consumed = static_cast<std::size_t>(lines.tellg());
  long lineno = 2;
  while (consumed < text.size()) {
    const auto nl = text.find('\n', consumed);
    if (nl == std::string::npos) break;  // truncated tail
    line = text.substr(consumed, nl - consumed);
    consumed = nl + 1;
    ++lineno;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 6) throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 6 fields");
    try {
      log.records.push_back({std::stoi(f[0]), parse_field(f[1]), parse_field(f[2]), parse_field(f[3]),
                             parse_field(f[4]), parse_field(f[5])});
    } catch (const std::exception&) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": malformed record");
    }
  }
  return log;
}

std::vector<LogRecord> to_log_records(const Trace& trace, const std::vector<double>& seconds) {
  std::vector<LogRecord> out;
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const EpochRecord& r = trace.records[i];
    out.push_back({r.epoch, r.grad_per_n, r.train, r.test, r.sigma, i < seconds.size() ? seconds[i] : 0.0});
  }
  return out;
}

}  // namespace rngd
