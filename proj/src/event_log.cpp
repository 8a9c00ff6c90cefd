#include "lattice/event_log.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "lattice/errors.hpp"
#include "lattice/io.hpp"

namespace lattice {

LogReadResult parse_log(std::string_view text) {
  LogReadResult out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    ++line_no;
    const std::size_t nl = text.find('\n', pos);
    const bool terminated = nl != std::string_view::npos;
    const std::size_t end = terminated ? nl : text.size();
    const std::string_view line = text.substr(pos, end - pos);
    const bool last = !terminated || end + 1 >= text.size();

    if (!terminated) {
      out.warnings.push_back("dropped unterminated trailing record at line " +
                             std::to_string(line_no));
      break;
    }
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      pos = end + 1;
      out.valid_bytes = pos;
      continue;
    }
    try {
      out.records.push_back(nlohmann::json::parse(line.begin(), line.end()));
    } catch (const nlohmann::json::parse_error&) {
      if (last) {
        out.warnings.push_back("dropped corrupt trailing record at line " +
                               std::to_string(line_no));
        break;
      }
      throw ParseError("corrupt event log record", line_no, 1);
    }
    pos = end + 1;
    out.valid_bytes = pos;
  }
  return out;
}

LogReadResult read_log(const std::string& path) {
  struct stat st{};
  if (::stat(path.c_str(), &st) != 0) {
    return {};
  }
  return parse_log(read_file(path));
}

EventLog::EventLog(std::string path, bool sync) : path_(std::move(path)), sync_(sync) {
  const auto existing = read_log(path_);
  fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) {
    throw Error("cannot open event log '" + path_ + "': " + std::strerror(errno));
  }
  struct stat st{};
  if (::fstat(fd_, &st) == 0 && static_cast<std::uint64_t>(st.st_size) > existing.valid_bytes) {
    if (::ftruncate(fd_, static_cast<off_t>(existing.valid_bytes)) != 0) {
      const int err = errno;
      ::close(fd_);
      throw Error("cannot trim event log '" + path_ + "': " + std::strerror(err));
    }
  }
}

EventLog::~EventLog() {
  if (fd_ >= 0) {
    ::close(fd_);
  }
}

void EventLog::append(const nlohmann::json& record) {
  std::string line = record.dump();
  line.push_back('\n');
  std::lock_guard lock(mu_);
  const char* data = line.data();
  std::size_t left = line.size();
  while (left > 0) {
    const ssize_t n = ::write(fd_, data, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error("event log write failed: " + std::string(std::strerror(errno)));
    }
    data += n;
    left -= static_cast<std::size_t>(n);
  }
  if (sync_ && ::fdatasync(fd_) != 0) {
    throw Error("event log sync failed: " + std::string(std::strerror(errno)));
  }
}

}  // namespace lattice
