#pragma once

#include <iosfwd>
#include <string>

#include "seglab/field.hpp"

namespace seglab {

// Plain-text PGM (P2) label masks: pixel value = 1-based class index,
// maxval = K.

LabelField read_pgm(std::istream& in);
LabelField read_pgm_file(const std::string& path);

void write_pgm(std::ostream& out, const LabelField& labels);
void write_pgm_file(const std::string& path, const LabelField& labels);

} // namespace seglab
