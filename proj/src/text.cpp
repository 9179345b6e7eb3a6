#include "adarec/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace adarec::text {

// Rounds on the shortest decimal form of the value, so 11.15 rounds to 11.2
// even though its binary representation is slightly below 11.15.
std::string fixed(double value, int decimals) {
  std::array<char, 512> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), std::fabs(value),
                                 std::chars_format::fixed);
  std::string digits(buf.data(), end);
  auto dot = digits.find('.');
  std::string int_part = dot == std::string::npos ? digits : digits.substr(0, dot);
  std::string frac_part = dot == std::string::npos ? std::string() : digits.substr(dot + 1);
  const auto want = static_cast<std::size_t>(decimals);
  const bool round_up = frac_part.size() > want && frac_part[want] >= '5';
  frac_part.resize(want, '0');

  std::string all = int_part + frac_part;
  if (round_up) {
    int i = static_cast<int>(all.size()) - 1;
    while (i >= 0 && all[static_cast<std::size_t>(i)] == '9') all[static_cast<std::size_t>(i--)] = '0';
    if (i < 0) {
      all.insert(all.begin(), '1');
    } else {
      ++all[static_cast<std::size_t>(i)];
    }
  }
  std::string out = all.substr(0, all.size() - want);
  if (want > 0) out += "." + all.substr(all.size() - want);
  const bool is_zero = std::all_of(all.begin(), all.end(), [](char c) { return c == '0'; });
  if (value < 0 && !is_zero) out.insert(out.begin(), '-');
  return out;
}

std::string fixed1(double value) { return fixed(value, 1); }

std::string shortest(double value) {
  if (value == 0.0) value = 0.0;
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), end);
}

std::string normalize_whitespace(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  bool pending_space = false;
  for (char c : in) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::string trim(std::string_view in) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!in.empty() && is_space(in.front())) in.remove_prefix(1);
  while (!in.empty() && is_space(in.back())) in.remove_suffix(1);
  return std::string(in);
}

std::string to_lower(std::string_view in) {
  std::string out(in);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string> split(std::string_view in, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = in.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.emplace_back(in.substr(start));
      return parts;
    }
    parts.emplace_back(in.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

}  // namespace adarec::text
