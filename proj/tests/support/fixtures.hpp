#pragma once

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "cbproof/prooffmt.hpp"

namespace cbp::testsupport {

inline std::filesystem::path fixture_dir() { return CBP_FIXTURE_DIR; }

inline std::filesystem::path fixture_path(const std::string& name) {
  return fixture_dir() / name;
}

inline ProofGraph load_fixture(const std::string& name) {
  return load_proof(fixture_path(name));
}

// A per-process scratch directory under the build tree; created lazily,
// left behind for post-mortems.
inline std::filesystem::path scratch_dir() {
  static const std::filesystem::path dir = [] {
    auto d = std::filesystem::temp_directory_path() /
             ("cbproof-tests-" + std::to_string(::getpid()));
    std::filesystem::create_directories(d);
    return d;
  }();
  return dir;
}

}  // namespace cbp::testsupport
