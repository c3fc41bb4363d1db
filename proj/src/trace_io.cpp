#include "xclocks/trace_io.hpp"

#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace xclocks {

namespace {

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

}  // namespace

void write_trace(std::ostream& os, const Trace& trace) {
  for (const auto& rec : trace) {
    nlohmann::json j;
    j["step"] = rec.index;
    j["path"] = rec.transition.path;
    j["rule"] = to_string(rec.transition.rule);
    j["fresh"] = rec.fresh;
    j["heap"] = hex64(rec.heap_digest);
    os << j.dump() << '\n';
  }
}

Trace read_trace(std::istream& is) {
  Trace trace;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      TraceStep rec;
      rec.index = j.at("step").get<std::size_t>();
      rec.transition.path = j.at("path").get<Path>();
      auto rule = rule_from_string(j.at("rule").get<std::string>());
      if (!rule) throw TraceFormatError("unknown rule");
      rec.transition.rule = *rule;
      rec.fresh = j.at("fresh").get<std::vector<Name>>();
      rec.heap_digest = std::stoull(j.at("heap").get<std::string>(), nullptr, 16);
      if (rec.transition.path.empty()) throw TraceFormatError("empty path");
      trace.push_back(std::move(rec));
    } catch (const std::exception& e) {
      throw TraceFormatError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return trace;
}

}  // namespace xclocks
