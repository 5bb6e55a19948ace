#include "qfc/cli/report.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#ifndef QFC_LINK_VERSION
#define QFC_LINK_VERSION "0.0.0"
#endif

namespace qfc::cli {

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &length, EVP_sha256(),
                 nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

namespace {

std::string utc_timestamp() {
  std::time_t t;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"))
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  else
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

ReportBundle::ReportBundle(std::string command, std::string config_json)
    : command_(std::move(command)), config_json_(std::move(config_json)) {}

void ReportBundle::add(std::string name, std::string content) {
  files_.push_back({std::move(name), std::move(content)});
}

const ReportFile* ReportBundle::find(std::string_view name) const {
  for (const auto& f : files_)
    if (f.name == name) return &f;
  return nullptr;
}

std::string ReportBundle::manifest(std::string_view timestamp) const {
  nlohmann::json m;
  m["tool"] = "qfc-link";
  m["version"] = QFC_LINK_VERSION;
  m["command"] = command_;
  m["config_sha256"] = sha256_hex(config_json_);
  m["generated_at"] = std::string(timestamp);
  m["files"] = nlohmann::json::array();
  for (const auto& f : files_)
    m["files"].push_back({{"name", f.name},
                          {"bytes", f.content.size()},
                          {"sha256", sha256_hex(f.content)}});
  return m.dump(2) + "\n";
}

std::vector<std::filesystem::path> ReportBundle::write(
    const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& name, const std::string& content) {
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw std::runtime_error("cannot write " + path.string());
    written.push_back(path);
  };
  for (const auto& f : files_) put(f.name, f.content);
  put(command_ + ".manifest.json", manifest(utc_timestamp()));
  return written;
}

}  // namespace qfc::cli
