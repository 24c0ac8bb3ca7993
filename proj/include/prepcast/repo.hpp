#pragma once

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "prepcast/errors.hpp"
#include "prepcast/record.hpp"

namespace prepcast {

struct RepoFilter {
  std::optional<std::string> resource_class;
  std::function<bool(const AppFeatures&)> app_predicate;  // null = accept all
};

// Append-only JSON-lines trace repository. One record per line; appends are
// serialized through an advisory flock so concurrent profilers on the same
// host never interleave partial lines. Readers see a consistent prefix.
class TraceRepo {
 public:
  explicit TraceRepo(std::string path) : path_(std::move(path)) {}

  const std::string& path() const { return path_; }

  void append(const ProfileRecord& r) { append_line(record_to_json(r).dump()); }
  void append(const TransferRecord& r) { append_line(transfer_record_to_json(r).dump()); }

  std::vector<ProfileRecord> query(const RepoFilter& filter = {}, bool lenient = false) const {
    std::vector<ProfileRecord> out;
    scan(lenient, [&](const json& j, const std::string& ctx) {
      if (j.value("type", "exec") != "exec") return;
      ProfileRecord r = record_from_json(j, ctx);
      if (filter.resource_class && r.resource_class != *filter.resource_class) return;
      if (filter.app_predicate && !filter.app_predicate(r.app)) return;
      out.push_back(std::move(r));
    });
    return out;
  }

  std::vector<TransferRecord> query_transfers(const std::optional<std::string>& to_class = {},
                                              bool lenient = false) const {
    std::vector<TransferRecord> out;
    scan(lenient, [&](const json& j, const std::string& ctx) {
      if (j.value("type", "exec") != "transfer") return;
      TransferRecord r = transfer_record_from_json(j, ctx);
      if (to_class && r.to_resource_class != *to_class) return;
      out.push_back(std::move(r));
    });
    return out;
  }

 private:
  void append_line(std::string line) {
    line.push_back('\n');
    int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd < 0) throw IoError("repo: cannot open " + path_ + ": " + std::strerror(errno));
    if (::flock(fd, LOCK_EX) != 0) {
      int e = errno;
      ::close(fd);
      throw IoError("repo: cannot lock " + path_ + ": " + std::strerror(e));
    }
    ssize_t n = ::write(fd, line.data(), line.size());
    int werr = errno;
    ::flock(fd, LOCK_UN);
    ::close(fd);
    if (n != static_cast<ssize_t>(line.size()))
      throw IoError("repo: short write to " + path_ + ": " + std::strerror(werr));
  }

  void scan(bool lenient, const std::function<void(const json&, const std::string&)>& sink) const {
    std::ifstream in(path_, std::ios::binary);
    if (!in) throw IoError("repo: cannot open " + path_);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::string ctx = path_ + ":" + std::to_string(lineno);
      try {
        json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (j.is_discarded()) throw ParseError(ctx + ": malformed JSON line");
        require_v1(j, ctx);
        sink(j, ctx);
      } catch (const Error& e) {
        if (!lenient) throw CorruptRecordError(std::string("corrupt record at ") + e.what());
        // lenient scan: skip the bad line
      }
    }
  }

  std::string path_;
};

// Free-function veneer for callers that prefer not to hold a class handle.
inline void repo_append(TraceRepo& repo, const ProfileRecord& r) { repo.append(r); }
inline std::vector<ProfileRecord> repo_query(const TraceRepo& repo, const RepoFilter& f = {},
                                             bool lenient = false) {
  return repo.query(f, lenient);
}

}  // namespace prepcast
