#pragma once

#include <iosfwd>
#include <string>

#include "segloc/nn/layers.hpp"

namespace segloc::nn {

/// Little-endian "SMNN" file: version, layer count, then per layer the kind tag,
/// array count and each array's dims and float32 values.
void save_checkpoint(std::ostream& out, Sequential& net);
void save_checkpoint(const std::string& path, Sequential& net);

/// Loads into an already built network; throws std::runtime_error on a kind,
/// shape or format mismatch.
void load_checkpoint(std::istream& in, Sequential& net);
void load_checkpoint(const std::string& path, Sequential& net);

}  // namespace segloc::nn
