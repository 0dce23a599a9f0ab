#pragma once

#include <string>

#include "lemda/optim.hpp"

namespace lemda {

// JSON checkpoint of a named parameter set: a magic header, a format version,
// and shape-tagged flat arrays. load_checkpoint fills an existing set in
// place and requires matching names and shapes.
void save_checkpoint(const ParameterSet& params, const std::string& path);
void load_checkpoint(ParameterSet& params, const std::string& path);

}  // namespace lemda
