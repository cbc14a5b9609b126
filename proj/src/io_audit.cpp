#include "fedint/io_audit.hpp"

namespace fedint {

std::mutex& IoAudit::mutex() {
  static std::mutex m;
  return m;
}

std::vector<IoAudit::Access>& IoAudit::log() {
  static std::vector<Access> entries;
  return entries;
}

std::string& IoAudit::current() {
  static std::string stage = "none";
  return stage;
}

void IoAudit::record(const std::filesystem::path& path) {
  std::lock_guard lock(mutex());
  log().push_back({current(), path});
}

std::vector<IoAudit::Access> IoAudit::snapshot() {
  std::lock_guard lock(mutex());
  return log();
}

void IoAudit::clear() {
  std::lock_guard lock(mutex());
  log().clear();
}

IoAudit::Stage::Stage(std::string name) {
  std::lock_guard lock(mutex());
  previous_ = std::exchange(current(), std::move(name));
}

IoAudit::Stage::~Stage() {
  std::lock_guard lock(mutex());
  current() = std::move(previous_);
}

}  // namespace fedint
