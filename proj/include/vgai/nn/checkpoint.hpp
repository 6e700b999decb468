#pragma once

#include <iosfwd>
#include <string>

#include "vgai/nn/layers.hpp"

namespace vgai::nn {

// Text network format:
//
//   vgai-network 1
//   name <name>
//   layers <count>
//   <kind> <in> <out> <kernel> <stride_h> <stride_w> <padding>    (one per layer)
//   params <count>
//   <param-name> <rank> <dim>...                                  (one per tensor)
//   values <total>
//   <value>                                                       (row-major, one per line)
//   end
//
// Values use the shortest decimal form that round-trips, so a write/read
// cycle reproduces every double bit for bit.
void write_network(std::ostream& out, const std::string& name, const Sequential& net);
Sequential read_network(std::istream& in, std::string* name = nullptr);

std::string format_double(double v);
double parse_double(const std::string& s);

}  // namespace vgai::nn
