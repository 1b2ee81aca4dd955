#pragma once

#include <cstdint>
#include <istream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lpsketch/common.hpp"

namespace lpsketch {

/// Turnstile update stream: a header line "n=<dimension>" followed by
/// "<index> <delta>" lines. '#' comments and blank lines are ignored.
struct UpdateStreamFile {
  std::uint64_t n = 0;
  std::vector<std::pair<std::uint64_t, std::int64_t>> updates;
};

/// Symbol stream (duplicate-finding input): same header, one symbol per line.
struct SymbolStreamFile {
  std::uint64_t n = 0;
  std::vector<std::uint64_t> symbols;
};

namespace detail {

inline bool skippable_line(const std::string& line) {
  for (char ch : line) {
    if (ch == '#') return true;
    if (!isspace(static_cast<unsigned char>(ch))) return false;
  }
  return true;
}

inline std::uint64_t parse_header(std::istream& in, std::size_t& line_no) {
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (skippable_line(line)) continue;
    if (line.rfind("n=", 0) != 0) {
      throw StreamFormatError("line " + std::to_string(line_no) +
                              ": expected header \"n=<dimension>\"");
    }
    std::istringstream body(line.substr(2));
    std::uint64_t n = 0;
    if (!(body >> n) || n == 0 || !(body >> std::ws).eof()) {
      throw StreamFormatError("line " + std::to_string(line_no) + ": bad dimension");
    }
    return n;
  }
  throw StreamFormatError("missing header \"n=<dimension>\"");
}

}  // namespace detail

/// Parses an update stream and enforces the per-coordinate magnitude bound
/// M (default n^2) over the whole replay.
inline UpdateStreamFile parse_update_stream(std::istream& in, std::int64_t magnitude_bound = 0) {
  UpdateStreamFile out;
  std::size_t line_no = 0;
  out.n = detail::parse_header(in, line_no);
  std::int64_t bound = magnitude_bound > 0
                           ? magnitude_bound
                           : static_cast<std::int64_t>(out.n) * static_cast<std::int64_t>(out.n);
  std::unordered_map<std::uint64_t, std::int64_t> accumulated;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::skippable_line(line)) continue;
    std::istringstream body(line);
    std::uint64_t i = 0;
    std::int64_t delta = 0;
    if (!(body >> i >> delta) || !(body >> std::ws).eof()) {
      throw StreamFormatError("line " + std::to_string(line_no) +
                              ": expected \"<index> <delta>\"");
    }
    if (i == 0 || i > out.n) {
      throw StreamFormatError("line " + std::to_string(line_no) + ": index outside [1,n]");
    }
    std::int64_t& acc = accumulated[i];
    acc += delta;
    if (acc > bound || acc < -bound) {
      throw StreamFormatError("line " + std::to_string(line_no) +
                              ": coordinate magnitude exceeds bound M");
    }
    out.updates.emplace_back(i, delta);
  }
  return out;
}

inline SymbolStreamFile parse_symbol_stream(std::istream& in) {
  SymbolStreamFile out;
  std::size_t line_no = 0;
  out.n = detail::parse_header(in, line_no);
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::skippable_line(line)) continue;
    std::istringstream body(line);
    std::uint64_t a = 0;
    if (!(body >> a) || !(body >> std::ws).eof()) {
      throw StreamFormatError("line " + std::to_string(line_no) + ": expected one symbol");
    }
    if (a == 0 || a > out.n) {
      throw StreamFormatError("line " + std::to_string(line_no) + ": symbol outside [1,n]");
    }
    out.symbols.push_back(a);
  }
  return out;
}

}  // namespace lpsketch
