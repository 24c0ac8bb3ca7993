#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"
#include "prepcast/errors.hpp"

namespace prepcast {

using json = nlohmann::json;

inline json parse_json_text(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw ParseError(what + ": malformed JSON");
  return j;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline json load_json_file(const std::string& path) {
  return parse_json_text(read_text_file(path), path);
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

// All on-disk documents carry "v": 1.
inline void require_v1(const json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("v") || !j["v"].is_number_integer() || j["v"].get<int>() != 1)
    throw ParseError(what + ": missing or unsupported schema version (want \"v\":1)");
}

}  // namespace prepcast
