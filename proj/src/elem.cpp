#include "mltt/elem.hpp"

#include <deque>
#include <mutex>
#include <unordered_map>

#include "mltt/error.hpp"

namespace mltt {

namespace detail {

struct ElemNode {
  Elem::Kind kind;
  std::string name;
  const ElemNode* first;
  const ElemNode* second;
  std::size_t hash;
};

}  // namespace detail

namespace {

using detail::ElemNode;

struct NodeKey {
  Elem::Kind kind;
  std::string_view name;
  const ElemNode* first;
  const ElemNode* second;

  friend bool operator==(const NodeKey&, const NodeKey&) = default;
};

struct NodeKeyHash {
  std::size_t operator()(const NodeKey& k) const noexcept {
    std::size_t h = static_cast<std::size_t>(k.kind) * 0x9e3779b97f4a7c15ULL;
    h ^= std::hash<std::string_view>{}(k.name) + 0x9e3779b9 + (h << 6) + (h >> 2);
    h ^= std::hash<const void*>{}(k.first) + 0x9e3779b9 + (h << 6) + (h >> 2);
    h ^= std::hash<const void*>{}(k.second) + 0x9e3779b9 + (h << 6) + (h >> 2);
    return h;
  }
};

class Interner {
 public:
  const ElemNode* intern(Elem::Kind kind, std::string_view name, const ElemNode* a,
                         const ElemNode* b) {
    std::lock_guard lock(mutex_);
    NodeKey key{kind, name, a, b};
    if (auto it = table_.find(key); it != table_.end()) return it->second;
    auto& node = storage_.emplace_back(ElemNode{kind, std::string(name), a, b, 0});
    node.hash = NodeKeyHash{}(NodeKey{kind, node.name, a, b});
    table_.emplace(NodeKey{kind, node.name, a, b}, &node);
    return &node;
  }

  static Interner& instance() {
    static Interner interner;
    return interner;
  }

 private:
  std::mutex mutex_;
  std::deque<ElemNode> storage_;
  std::unordered_map<NodeKey, const ElemNode*, NodeKeyHash> table_;
};

const ElemNode* unit_node() {
  static const ElemNode* node = Interner::instance().intern(Elem::Kind::Unit, "", nullptr, nullptr);
  return node;
}

std::strong_ordering compare_nodes(const ElemNode* a, const ElemNode* b) {
  if (a == b) return std::strong_ordering::equal;
  if (a->kind != b->kind) return a->kind <=> b->kind;
  switch (a->kind) {
    case Elem::Kind::Unit:
      return std::strong_ordering::equal;
    case Elem::Kind::Atom: {
      int c = a->name.compare(b->name);
      return c < 0 ? std::strong_ordering::less
                   : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
    }
    case Elem::Kind::Pair:
      if (auto c = compare_nodes(a->first, b->first); c != 0) return c;
      return compare_nodes(a->second, b->second);
  }
  return std::strong_ordering::equal;
}

void print_node(const ElemNode* n, std::string& out) {
  switch (n->kind) {
    case Elem::Kind::Unit:
      out += "()";
      break;
    case Elem::Kind::Atom:
      out += n->name;
      break;
    case Elem::Kind::Pair:
      out += '(';
      print_node(n->first, out);
      out += ',';
      print_node(n->second, out);
      out += ')';
      break;
  }
}

class ElemParser {
 public:
  explicit ElemParser(std::string_view text) : text_(text) {}

  Elem parse_all() {
    Elem e = parse();
    if (pos_ != text_.size()) fail("trailing characters");
    return e;
  }

 private:
  Elem parse() {
    if (pos_ >= text_.size()) fail("unexpected end of input");
    if (text_[pos_] == '(') {
      ++pos_;
      if (pos_ < text_.size() && text_[pos_] == ')') {
        ++pos_;
        return Elem::unit();
      }
      Elem l = parse();
      expect(',');
      Elem r = parse();
      expect(')');
      return Elem::pair(l, r);
    }
    std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != '(' && text_[pos_] != ')' && text_[pos_] != ',')
      ++pos_;
    auto name = text_.substr(start, pos_ - start);
    if (!is_valid_atom_name(name)) fail("invalid atom '" + std::string(name) + "'");
    return Elem::atom(name);
  }

  void expect(char c) {
    if (pos_ >= text_.size() || text_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  [[noreturn]] void fail(const std::string& what) {
    throw ValidationError("malformed element \"" + std::string(text_) + "\" at offset " +
                          std::to_string(pos_) + ": " + what);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

bool is_valid_atom_name(std::string_view name) {
  if (name.empty()) return false;
  for (char c : name) {
    if (c == '(' || c == ')' || c == ',' || c == ' ' || c == '\t' || c == '\n' || c == '\r')
      return false;
  }
  return true;
}

Elem::Elem() : node_(unit_node()) {}

Elem Elem::atom(std::string_view name) {
  if (!is_valid_atom_name(name))
    throw ValidationError("invalid atom name '" + std::string(name) + "'");
  return Elem(Interner::instance().intern(Kind::Atom, name, nullptr, nullptr));
}

Elem Elem::pair(const Elem& first, const Elem& second) {
  return Elem(Interner::instance().intern(Kind::Pair, "", first.node_, second.node_));
}

Elem Elem::tuple(std::span<const Elem> items) {
  Elem acc;
  for (const auto& item : items) acc = pair(acc, item);
  return acc;
}

Elem Elem::parse(std::string_view text) { return ElemParser(text).parse_all(); }

Elem::Kind Elem::kind() const { return node_->kind; }

const std::string& Elem::name() const { return node_->name; }

Elem Elem::first() const {
  if (node_->kind != Kind::Pair) throw ValidationError("first() of non-pair " + to_string());
  return Elem(node_->first);
}

Elem Elem::second() const {
  if (node_->kind != Kind::Pair) throw ValidationError("second() of non-pair " + to_string());
  return Elem(node_->second);
}

std::string Elem::to_string() const {
  std::string out;
  print_node(node_, out);
  return out;
}

std::size_t Elem::hash() const { return node_->hash; }

std::strong_ordering operator<=>(const Elem& a, const Elem& b) {
  return compare_nodes(a.node_, b.node_);
}

std::ostream& operator<<(std::ostream& os, const Elem& e) { return os << e.to_string(); }

}  // namespace mltt
