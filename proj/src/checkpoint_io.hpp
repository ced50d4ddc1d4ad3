#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pim/graph.hpp"

namespace pim::detail {

struct SegmentFile {
  std::vector<std::pair<std::string, std::string>> header;  // key value
  std::map<std::string, Matrix> segments;
};

// Writes <dir>/manifest.txt and <dir>/params.bin. `magic` is the first
// manifest line.
void write_segments(const std::string& dir, const std::string& magic,
                    const std::vector<std::pair<std::string, std::string>>& header,
                    const std::vector<std::pair<std::string, const Matrix*>>& segments);

SegmentFile read_segments(const std::string& dir, const std::string& magic);

}  // namespace pim::detail
