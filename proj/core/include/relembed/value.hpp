#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace relembed {

enum class DomainKind : std::uint8_t { kCategorical, kNumeric, kText };

std::string_view to_string(DomainKind kind);
DomainKind parse_domain_kind(std::string_view text);

/// A cell value: Null, or a categorical, numeric or text constant.
///
/// Categorical and text values both carry a string but never compare equal
/// to each other.
class Value {
 public:
  enum class Tag : std::uint8_t { kNull, kCategorical, kNumeric, kText };

  Value() = default;

  static Value null() { return {}; }
  static Value categorical(std::string s) { return Value(Tag::kCategorical, std::move(s), 0.0); }
  static Value numeric(double x) { return Value(Tag::kNumeric, {}, x); }
  static Value text(std::string s) { return Value(Tag::kText, std::move(s), 0.0); }

  /// Parses a CSV cell for an attribute of the given kind; the empty cell is Null.
  static Value parse(std::string_view cell, DomainKind kind);

  Tag tag() const { return tag_; }
  bool is_null() const { return tag_ == Tag::kNull; }
  bool is_numeric() const { return tag_ == Tag::kNumeric; }
  bool matches(DomainKind kind) const;

  const std::string& str() const { return str_; }
  double number() const { return num_; }

  /// Rendering used for CSV output; Null renders as the empty string.
  std::string to_string() const;

  friend bool operator==(const Value&, const Value&) = default;
  friend bool operator<(const Value& a, const Value& b);

 private:
  Value(Tag tag, std::string s, double x) : tag_(tag), str_(std::move(s)), num_(x) {}

  Tag tag_ = Tag::kNull;
  std::string str_;
  double num_ = 0.0;
};

struct ValueHash {
  std::size_t operator()(const Value& v) const noexcept;
};

}  // namespace relembed
