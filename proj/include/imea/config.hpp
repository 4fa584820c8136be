#pragma once
// Flat `key = value` configuration files for training runs.

#include <filesystem>
#include <string>

#include "imea/training.hpp"

namespace imea {

// Lines are `key = value`; blank lines and `#` comments are ignored. Unknown
// keys and unparsable values raise ParseError with the line number.
TrainConfig parse_config(const std::string& text, const std::string& origin = "<config>");
TrainConfig load_config(const std::filesystem::path& path);

// Every key with its current value, in the same format.
std::string format_config(const TrainConfig& config);

}  // namespace imea
