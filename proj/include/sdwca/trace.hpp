#pragma once

// Line-delimited event trace: round,node,event,detail. The detail column is a
// ';'-separated list of key=value pairs and never contains commas.

#include <charconv>
#include <cstdint>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "sdwca/geo_graph.hpp"
#include "sdwca/message.hpp"

namespace sdwca {

/// Shortest round-trip text for a double; identical on every run.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, end);
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw std::invalid_argument("parse_double: bad number '" + s + "'");
  return v;
}

struct TraceRecord {
  Round round = 0;
  NodeId node = 0;
  std::string event;
  std::string detail;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

class EventTrace {
 public:
  static constexpr const char* kHeader = "round,node,event,detail";

  void append(Round round, NodeId node, std::string event, std::string detail = {}) {
    records_.push_back({round, node, std::move(event), std::move(detail)});
  }

  const std::vector<TraceRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }

  std::size_t count(const std::string& event) const {
    std::size_t n = 0;
    for (const auto& r : records_) n += r.event == event;
    return n;
  }

  void write(std::ostream& out) const {
    out << kHeader << '\n';
    for (const auto& r : records_) out << r.round << ',' << r.node << ',' << r.event << ',' << r.detail << '\n';
  }

  std::string str() const {
    std::ostringstream os;
    write(os);
    return os.str();
  }

 private:
  std::vector<TraceRecord> records_;
};

/// Value of `key` inside a detail string, or empty when absent.
inline std::string detail_value(const std::string& detail, const std::string& key) {
  std::size_t pos = 0;
  while (pos <= detail.size()) {
    const std::size_t end = std::min(detail.find(';', pos), detail.size());
    const std::string item = detail.substr(pos, end - pos);
    const std::size_t eq = item.find('=');
    if (eq != std::string::npos && item.substr(0, eq) == key) return item.substr(eq + 1);
    pos = end + 1;
  }
  return {};
}

}  // namespace sdwca
