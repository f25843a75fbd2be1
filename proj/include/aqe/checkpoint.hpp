#pragma once

#include <iosfwd>
#include <string>

#include "aqe/model.hpp"

namespace aqe {

/// Plain-text archive: header, config, encoder vocabulary, then every tensor
/// with values in hexadecimal floating point so reloading is bit-exact.
void write_model(std::ostream& out, const Model& model);
Model read_model(std::istream& in);

void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

}  // namespace aqe
