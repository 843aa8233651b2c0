#include "relembed/value.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "relembed/error.hpp"

namespace relembed {

std::string_view to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::kCategorical: return "categorical";
    case DomainKind::kNumeric: return "numeric";
    case DomainKind::kText: return "text";
  }
  return "?";
}

DomainKind parse_domain_kind(std::string_view text) {
  if (text == "categorical") return DomainKind::kCategorical;
  if (text == "numeric") return DomainKind::kNumeric;
  if (text == "text") return DomainKind::kText;
  throw SchemaError("unknown domain kind '" + std::string(text) + "'");
}

Value Value::parse(std::string_view cell, DomainKind kind) {
  if (cell.empty()) return null();
  switch (kind) {
    case DomainKind::kCategorical: return categorical(std::string(cell));
    case DomainKind::kText: return text(std::string(cell));
    case DomainKind::kNumeric: {
      std::string_view s = cell;
      while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
      while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
      if (!s.empty() && s.front() == '+') s.remove_prefix(1);
      double x = 0.0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
      if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(x)) {
        throw IntegrityError("not a finite number: '" + std::string(cell) + "'");
      }
      return numeric(x);
    }
  }
  return null();
}

bool Value::matches(DomainKind kind) const {
  switch (tag_) {
    case Tag::kNull: return true;
    case Tag::kCategorical: return kind == DomainKind::kCategorical;
    case Tag::kNumeric: return kind == DomainKind::kNumeric;
    case Tag::kText: return kind == DomainKind::kText;
  }
  return false;
}

std::string Value::to_string() const {
  switch (tag_) {
    case Tag::kNull: return {};
    case Tag::kNumeric: {
      char buf[32];
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, num_);
      return std::string(buf, ptr);
    }
    default: return str_;
  }
}

bool operator<(const Value& a, const Value& b) {
  if (a.tag_ != b.tag_) return a.tag_ < b.tag_;
  if (a.tag_ == Value::Tag::kNumeric) return a.num_ < b.num_;
  return a.str_ < b.str_;
}

std::size_t ValueHash::operator()(const Value& v) const noexcept {
  std::size_t h = static_cast<std::size_t>(v.tag()) * 0x9E3779B97F4A7C15ull;
  if (v.is_numeric()) {
    double x = v.number() == 0.0 ? 0.0 : v.number();  // +0 and -0 hash alike
    return h ^ std::hash<double>{}(x);
  }
  return h ^ std::hash<std::string>{}(v.str());
}

}  // namespace relembed
