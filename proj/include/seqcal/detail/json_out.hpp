#pragma once

// Minimal streaming JSON writer for the canonical output files. Keys are
// emitted in insertion order and doubles with 12 significant digits, so a
// rerun with identical inputs produces byte-identical files.

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

namespace seqcal::detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  std::string s(buf);
  // %.12g prints whole doubles without a decimal point; that is still a
  // valid JSON number, so leave it alone.
  if (s == "inf") return "1e999";
  if (s == "-inf") return "-1e999";
  if (s == "nan" || s == "-nan") return "null";
  return s;
}

inline std::string escape_json(std::string_view s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

class JsonWriter {
 public:
  JsonWriter& begin_object() { return token("{", true); }
  JsonWriter& end_object() { return close("}"); }
  JsonWriter& begin_array() { return token("[", true); }
  JsonWriter& end_array() { return close("]"); }

  JsonWriter& key(std::string_view name) {
    comma();
    out_ += '"';
    out_ += escape_json(name);
    out_ += "\":";
    pending_value_ = true;
    return *this;
  }

  JsonWriter& value(double v) { return raw(format_double(v)); }
  JsonWriter& value(int v) { return raw(std::to_string(v)); }
  JsonWriter& value(std::int64_t v) { return raw(std::to_string(v)); }
  JsonWriter& value(std::uint64_t v) { return raw(std::to_string(v)); }
  JsonWriter& value(bool v) { return raw(v ? "true" : "false"); }
  JsonWriter& value(std::string_view v) { return raw('"' + escape_json(v) + '"'); }
  JsonWriter& value(const char* v) { return value(std::string_view(v)); }

  const std::string& str() const { return out_; }

 private:
  JsonWriter& raw(const std::string& text) {
    comma();
    out_ += text;
    pending_value_ = false;
    if (!stack_.empty()) stack_.back() = false;  // next sibling needs a comma
    return *this;
  }

  JsonWriter& token(const char* open, bool push) {
    comma();
    out_ += open;
    pending_value_ = false;
    if (push) stack_.push_back(true);
    return *this;
  }

  JsonWriter& close(const char* text) {
    out_ += text;
    if (!stack_.empty()) stack_.pop_back();
    if (!stack_.empty()) stack_.back() = false;
    return *this;
  }

  void comma() {
    if (pending_value_) return;  // key already emitted the separator
    if (!stack_.empty() && !stack_.back()) out_ += ',';
  }

  std::string out_;
  std::vector<bool> stack_;  // true while the current container is still empty
  bool pending_value_ = false;
};

}  // namespace seqcal::detail
