#pragma once

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pgrowth/core/error.hpp"

namespace pgrowth {

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) throw IoError("SHA-256 failed");
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

/// Shortest round-trip rendering; non-finite values as nan / inf / -inf.
inline std::string csv_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return fmt::format("{}", x);
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  class Row {
   public:
    explicit Row(CsvTable& t) : table_(t) {}
    Row& operator<<(double x) { return push(csv_number(x)); }
    Row& operator<<(int x) { return push(std::to_string(x)); }
    Row& operator<<(std::size_t x) { return push(std::to_string(x)); }
    Row& operator<<(bool x) { return push(x ? "1" : "0"); }
    Row& operator<<(const std::string& s) { return push(s); }
    Row& operator<<(const char* s) { return push(s); }
    ~Row() { table_.rows_.push_back(std::move(cells_)); }
    Row(const Row&) = delete;
    Row& operator=(const Row&) = delete;

   private:
    Row& push(std::string s) {
      cells_.push_back(std::move(s));
      return *this;
    }
    CsvTable& table_;
    std::vector<std::string> cells_;
  };

  Row row() { return Row(*this); }

  [[nodiscard]] std::string str() const {
    std::string out = join(header_);
    for (const auto& r : rows_) {
      if (r.size() != header_.size()) throw IoError("CSV row width does not match the header");
      out += join(r);
    }
    return out;
  }

 private:
  static std::string join(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) line += ',';
      line += cells[i];
    }
    return line + "\n";
  }
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Writes the artifacts of one run and, last of all, manifest.json with their SHA-256 hashes.
/// A run that fails part-way leaves no manifest behind.
class ArtifactWriter {
 public:
  ArtifactWriter(std::filesystem::path dir, std::set<std::string> formats) : dir_(std::move(dir)), formats_(std::move(formats)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory '" + dir_.string() + "': " + ec.message());
    std::filesystem::remove(dir_ / "manifest.json", ec);
  }

  [[nodiscard]] bool wants(const std::string& format) const { return formats_.count(format) > 0; }
  [[nodiscard]] const std::filesystem::path& directory() const { return dir_; }

  void text(const std::string& name, const std::string& content) {
    const auto path = dir_ / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    out.close();
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    files_[name] = {sha256_hex(content), content.size()};
  }

  void json(const std::string& name, const nlohmann::json& j) {
    if (wants("json")) text(name, j.dump(2) + "\n");
  }
  void csv(const std::string& name, const CsvTable& t) {
    if (wants("csv")) text(name, t.str());
  }
  void plot(const std::string& name, const std::string& script) {
    if (wants("plot") && wants("csv")) text(name, script);
  }
  void binary(const std::string& name, const std::string& bytes) {
    if (wants("snapshot")) text(name, bytes);
  }

  /// Writes the manifest and returns its content.
  nlohmann::json finish(nlohmann::json header) {
    nlohmann::json files = nlohmann::json::array();
    for (const auto& [name, info] : files_) files.push_back({{"path", name}, {"sha256", info.first}, {"bytes", info.second}});
    header["files"] = files;
    const std::string content = header.dump(2) + "\n";
    const auto path = dir_ / "manifest.json";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    out.close();
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    return header;
  }

 private:
  std::filesystem::path dir_;
  std::set<std::string> formats_;
  std::map<std::string, std::pair<std::string, std::size_t>> files_;
};

}  // namespace pgrowth
