#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cdl::detail {

inline std::string_view trim(std::string_view s) {
  const char* ws = " \t\r\n";
  auto first = s.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(ws);
  return s.substr(first, last - first + 1);
}

// Splits on runs of spaces/tabs.
inline std::vector<std::string_view> split_fields(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    if (pos >= s.size()) break;
    std::size_t end = pos;
    while (end < s.size() && s[end] != ' ' && s[end] != '\t') ++end;
    out.push_back(s.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

inline std::vector<std::string_view> split_on(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    auto next = s.find(sep, pos);
    out.push_back(trim(s.substr(pos, next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

inline bool parse_uint(std::string_view s, std::uint64_t& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline bool parse_int(std::string_view s, std::int64_t& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// Accepts decimal, exponent, hexfloat ("0x1.8p+1") and inf/nan spellings.
inline bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  bool negative = false;
  std::string_view body = s;
  if (body.front() == '-' || body.front() == '+') {
    negative = body.front() == '-';
    body.remove_prefix(1);
  }
  auto fmt = std::chars_format::general;
  if (body.size() > 2 && body[0] == '0' && (body[1] == 'x' || body[1] == 'X')) {
    body.remove_prefix(2);
    fmt = std::chars_format::hex;
  }
  if (body.empty() || body.front() == '-' || body.front() == '+') return false;
  auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), out, fmt);
  if (ec != std::errc() || ptr != body.data() + body.size()) return false;
  if (negative) out = -out;
  return true;
}

// Shortest round-trip hexfloat text, e.g. "0x1.8p+1".
inline std::string format_hex(double value) {
  char buf[64];
  char* p = buf;
  if (value < 0 || (value == 0 && std::signbit(value))) {
    *p++ = '-';
    value = -value;
  }
  if (std::isfinite(value)) {
    *p++ = '0';
    *p++ = 'x';
  }
  auto [end, ec] = std::to_chars(p, buf + sizeof(buf), value, std::chars_format::hex);
  return std::string(buf, end);
}

}  // namespace cdl::detail
