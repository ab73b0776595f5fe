#pragma once

#include <string_view>

namespace arwpcn {

/// Warnings go to stderr unless silenced (tests and sweeps silence them).
void set_warnings_enabled(bool enabled);
void warn(std::string_view message);

}  // namespace arwpcn
