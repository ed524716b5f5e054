#pragma once

#include <json.hpp>

namespace cachesage {

// Ordered JSON keeps every serialized artifact byte-stable across runs.
using json = nlohmann::ordered_json;

}  // namespace cachesage
