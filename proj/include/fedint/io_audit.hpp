#pragma once

#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

namespace fedint {

/// Process-wide record of raw file reads, tagged with the active stage.
/// Lets tests check that silo data is only touched inside that silo's
/// local materialization stage.
class IoAudit {
 public:
  struct Access {
    std::string stage;
    std::filesystem::path path;
  };

  static void record(const std::filesystem::path& path);
  static std::vector<Access> snapshot();
  static void clear();

  /// RAII stage tag; nests, restoring the previous tag on destruction.
  class Stage {
   public:
    explicit Stage(std::string name);
    ~Stage();
    Stage(const Stage&) = delete;
    Stage& operator=(const Stage&) = delete;

   private:
    std::string previous_;
  };

 private:
  static std::mutex& mutex();
  static std::vector<Access>& log();
  static std::string& current();
};

}  // namespace fedint
