#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace slicefi {

/// One single-event upset: invert `bit` of register `reg` in cycle `cycle`.
struct FaultDescriptor {
  std::string reg;
  std::uint32_t bit = 0;
  std::uint32_t cycle = 0;

  friend auto operator<=>(const FaultDescriptor&, const FaultDescriptor&) = default;
  friend bool operator==(const FaultDescriptor&, const FaultDescriptor&) = default;
};

/// Half-open range of injection cycles [begin, end).
struct CycleWindow {
  std::uint32_t begin = 0;
  std::uint32_t end = 0;

  std::uint32_t size() const { return end > begin ? end - begin : 0; }
  bool contains(std::uint32_t c) const { return c >= begin && c < end; }
  friend bool operator==(const CycleWindow&, const CycleWindow&) = default;
};

}  // namespace slicefi
