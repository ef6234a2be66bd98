// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace favf {

using Date = std::chrono::sys_days;

/// Parses `YYYY-MM-DD`. Throws favf::Error on malformed input.
Date parse_date(std::string_view text);

std::string format_date(Date d);

inline Date date_from_ms(long long ms_since_epoch) {
  return std::chrono::floor<std::chrono::days>(
      std::chrono::sys_time<std::chrono::milliseconds>(std::chrono::milliseconds(ms_since_epoch)));
}

inline long long date_to_ms(Date d) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(d.time_since_epoch()).count();
}

}  // namespace favf
