#pragma once

#include <string_view>

namespace forktms::simd {

enum class Level { Scalar, Avx2 };

std::string_view to_string(Level level);

/// Best level the running CPU supports (and the build compiled in).
Level detected_level();

/// Level the dispatching entry points currently use. Defaults to the
/// detected level; FORKTMS_SIMD=scalar in the environment forces scalar.
Level active_level();

/// Requests a level; clamped to what the CPU supports. Returns the level in
/// effect afterwards.
Level set_level(Level level);

// Pins a level for the lifetime of the object.
class ScopedLevel {
 public:
  explicit ScopedLevel(Level level) : previous_(active_level()) { set_level(level); }
  ~ScopedLevel() { set_level(previous_); }
  ScopedLevel(const ScopedLevel&) = delete;
  ScopedLevel& operator=(const ScopedLevel&) = delete;

 private:
  Level previous_;
};

}  // namespace forktms::simd
