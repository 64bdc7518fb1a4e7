#include <factline/rational.hpp>

namespace factline {

std::string rat_to_string(const Rat& r) {
  const BigInt num = boost::multiprecision::numerator(r);
  const BigInt den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

Rat parse_rat(const std::string& text) {
  if (text.empty()) throw RationalParseError("empty rational literal");
  const auto slash = text.find('/');
  const auto parse_int = [&](const std::string& part) -> BigInt {
    if (part.empty()) throw RationalParseError("empty integer in '" + text + "'");
    std::size_t i = (part[0] == '-' || part[0] == '+') ? 1 : 0;
    if (i == part.size()) throw RationalParseError("sign without digits in '" + text + "'");
    for (; i < part.size(); ++i)
      if (part[i] < '0' || part[i] > '9')
        throw RationalParseError("invalid character '" + std::string(1, part[i]) + "' in '" + text + "'");
    return BigInt(part);
  };
  if (slash == std::string::npos) return Rat(parse_int(text));
  const BigInt num = parse_int(text.substr(0, slash));
  const BigInt den = parse_int(text.substr(slash + 1));
  if (den == 0) throw RationalParseError("zero denominator in '" + text + "'");
  return Rat(num, den);
}

}  // namespace factline
