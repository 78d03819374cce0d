#include "liboost/parallel.hpp"

#include <cstdlib>
#include <string>

#include "liboost/errors.hpp"

namespace liboost {

std::size_t worker_count() {
  if (const char* env = std::getenv("LIBOOST_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) {
      throw ConfigError("LIBOOST_THREADS must be a positive integer, got '" + std::string(env) + "'");
    }
    return static_cast<std::size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace liboost
