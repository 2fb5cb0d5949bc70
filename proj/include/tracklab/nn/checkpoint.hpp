#pragma once

#include <string>
#include <vector>

#include "tracklab/nn/graph.hpp"

namespace tracklab {

// Versioned binary checkpoint: a header with the format version and a hash
// of the architecture description, followed by named parameter blobs in
// declaration order, 64-bit little-endian.
//
// Loading verifies the architecture hash and every blob's name and shape;
// any mismatch or truncation throws before a single parameter is touched.

uint64_t fnv1a64(const std::string& text);

void save_weights(const std::vector<Param*>& params, const std::string& arch_desc,
                  const std::string& path);

// Params must already have the expected shapes (construct the net first).
void load_weights(const std::vector<Param*>& params, const std::string& arch_desc,
                  const std::string& path);

// Reads just the architecture description stored in a checkpoint.
std::string peek_arch(const std::string& path);

}  // namespace tracklab
