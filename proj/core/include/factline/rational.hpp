#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <stdexcept>
#include <string>

namespace factline {

using Rat = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

struct RationalParseError : std::runtime_error {
  explicit RationalParseError(const std::string& what) : std::runtime_error(what) {}
};

// "p" or "p/q", q > 0 after normalization.
std::string rat_to_string(const Rat& r);

// Accepts "p", "-p", "p/q" with optional sign on p. Throws RationalParseError.
Rat parse_rat(const std::string& text);

}  // namespace factline
