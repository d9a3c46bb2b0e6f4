#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace rlreach::io {

// Shortest decimal representation that parses back to the identical double.
std::string format_double(double value);
std::string format_int(std::int64_t value);

double parse_double(std::string_view text);
std::int64_t parse_int(std::string_view text);

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file, flushes, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// Parses JSON; errors carry the file path and byte offset.
nlohmann::json read_json(const std::filesystem::path& path);
void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& doc);
std::string dump_json(const nlohmann::json& doc);

std::string utc_timestamp_now();

// Exclusive advisory lock on a file; released on destruction.
class FileLock {
 public:
  explicit FileLock(const std::filesystem::path& lock_path);
  ~FileLock();
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

}  // namespace rlreach::io
