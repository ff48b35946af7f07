#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

namespace mltt {

namespace detail {
struct ElemNode;
}

/// Canonical set-theoretic value: an atom, the empty tuple, or a pair.
///
/// Values are hash-consed, so equality is pointer identity and copies are
/// free. Nodes are never released; the universe of values built by one
/// process stays small at the sizes this library targets.
class Elem {
 public:
  enum class Kind : unsigned char { Unit, Atom, Pair };

  /// The empty tuple.
  Elem();

  static Elem unit() { return Elem(); }
  static Elem atom(std::string_view name);
  static Elem pair(const Elem& first, const Elem& second);
  /// Left-nested tuple starting from the empty tuple: ((((), x1), x2), ...).
  static Elem tuple(std::span<const Elem> items);

  /// Inverse of to_string(). Throws ValidationError on malformed input.
  static Elem parse(std::string_view text);

  Kind kind() const;
  bool is_unit() const { return kind() == Kind::Unit; }
  bool is_atom() const { return kind() == Kind::Atom; }
  bool is_pair() const { return kind() == Kind::Pair; }

  const std::string& name() const;
  Elem first() const;
  Elem second() const;

  /// Canonical printing: atoms verbatim, () for the empty tuple, (l,r) for pairs.
  std::string to_string() const;

  std::size_t hash() const;

  friend bool operator==(const Elem& a, const Elem& b) { return a.node_ == b.node_; }
  /// Structural order: unit < atoms < pairs; atoms by name, pairs lexicographically.
  friend std::strong_ordering operator<=>(const Elem& a, const Elem& b);

 private:
  explicit Elem(const detail::ElemNode* node) : node_(node) {}
  const detail::ElemNode* node_;
};

std::ostream& operator<<(std::ostream& os, const Elem& e);

/// Atoms must be non-empty and avoid the characters used by the printed form.
bool is_valid_atom_name(std::string_view name);

}  // namespace mltt

template <>
struct std::hash<mltt::Elem> {
  std::size_t operator()(const mltt::Elem& e) const noexcept { return e.hash(); }
};
