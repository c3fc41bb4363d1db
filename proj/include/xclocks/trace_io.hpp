#pragma once

// Line-delimited JSON traces, one object per step:
//   {"step":0,"path":["l#0"],"rule":"R-make","fresh":["c#1"],"heap":"9a3f..."}

#include <iosfwd>
#include <stdexcept>

#include "xclocks/runtime.hpp"

namespace xclocks {

class TraceFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_trace(std::ostream& os, const Trace& trace);
Trace read_trace(std::istream& is);

}  // namespace xclocks
