#pragma once

#include <cstdint>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace lattice {

struct LogReadResult {
  std::vector<nlohmann::json> records;
  std::uint64_t valid_bytes = 0;       // length of the prefix made of complete records
  std::vector<std::string> warnings;  // e.g. a dropped partial trailing record
};

// Parses newline-delimited JSON records. A final record that is unterminated
// or unparseable is dropped with a warning; a bad record before the end is a
// ParseError.
LogReadResult parse_log(std::string_view text);
LogReadResult read_log(const std::string& path);

// Append-only newline-delimited JSON file. Each record goes out in one write(2)
// call under a mutex, so records never interleave.
class EventLog {
 public:
  // Opens (creating if needed) and cuts any partial trailing record so that
  // later appends start on a record boundary.
  explicit EventLog(std::string path, bool sync = true);
  ~EventLog();

  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;

  void append(const nlohmann::json& record);

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
  bool sync_;
  int fd_ = -1;
  std::mutex mu_;
};

}  // namespace lattice
