#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace qfc::cli {

std::string sha256_hex(std::string_view data);

struct ReportFile {
  std::string name;
  std::string content;
};

// Output files of one command, kept in memory until everything has been
// computed. write() adds "<command>.manifest.json" listing each file with its
// SHA-256, the config hash, the tool version and a timestamp (taken from
// SOURCE_DATE_EPOCH when set).
class ReportBundle {
 public:
  ReportBundle(std::string command, std::string config_json);

  void add(std::string name, std::string content);
  const std::vector<ReportFile>& files() const { return files_; }
  const ReportFile* find(std::string_view name) const;

  std::string manifest(std::string_view timestamp) const;
  // Writes all files and the manifest into `dir`, creating it if needed.
  std::vector<std::filesystem::path> write(const std::filesystem::path& dir) const;

  const std::string& command() const { return command_; }

 private:
  std::string command_;
  std::string config_json_;
  std::vector<ReportFile> files_;
};

}  // namespace qfc::cli
