#pragma once

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace prophecy::testing {

// Compares against tests/golden/<name>. With PROPHECY_UPDATE_GOLDEN=1 in the
// environment the file is rewritten instead.
inline bool matches_golden(const std::string& name, const std::string& text) {
  const std::string path = std::string(PROPHECY_GOLDEN) + "/" + name;
  if (const char* u = std::getenv("PROPHECY_UPDATE_GOLDEN"); u && std::string(u) == "1") {
    std::ofstream(path, std::ios::binary) << text;
    return true;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str() == text;
}

}  // namespace prophecy::testing
